"""Rule-based canonicalization of entity surface forms.

A surface is split into word units at whitespace (and underscores) and at
lower-to-upper camel-case transitions, a trailing plural is stripped from each
unit, everything is lowercased, and units are rejoined: whitespace becomes
``_`` while camel-case pieces are glued back together::

    >>> normalize_entity("SIAsNN")
    'siann'
    >>> normalize_entity("respiratory illnesses")
    'respiratory_illness'

Hyphens are left alone, so ``ACE-2`` and ``ACE2`` stay distinct unless an
alias table maps one onto the other.
"""
from __future__ import annotations

import csv
import functools
import re
from pathlib import Path
from typing import Mapping

_SEPARATORS = re.compile(r"[\s_]+")
# shortest unit eligible for plural stripping; keeps "gas", "bus", "mrs" intact
MIN_PLURAL_LEN = 4


class NormalizationError(ValueError):
    pass


def _camel_pieces(word: str) -> list[str]:
    pieces = []
    start = 0
    for i in range(1, len(word)):
        if word[i - 1].islower() and word[i].isupper():
            pieces.append(word[start:i])
            start = i
    pieces.append(word[start:])
    return pieces


def strip_plural(unit: str) -> str:
    """Drop one trailing plural marker, matching case-insensitively."""
    if len(unit) < MIN_PLURAL_LEN:
        return unit
    low = unit.lower()
    if low.endswith("ies"):
        return unit[:-3] + ("Y" if unit[-3].isupper() else "y")
    if low.endswith("sses"):
        return unit[:-2]
    if low.endswith("es"):
        return unit[:-1]
    if low.endswith("s") and unit[-2].isalpha() and low[-2] != "s":
        return unit[:-1]
    return unit


def is_blank(surface: str) -> bool:
    """True when the surface has no word units, i.e. only whitespace and underscores."""
    return not _SEPARATORS.sub("", surface)


def _normalize_once(surface: str) -> str:
    words = [w for w in _SEPARATORS.split(surface.strip()) if w]
    return "_".join(
        "".join(strip_plural(piece) for piece in _camel_pieces(word)).lower()
        for word in words
    )


@functools.lru_cache(maxsize=1 << 16)
def normalize_entity(surface: str) -> str:
    """Map a surface form to its normalized key.

    The rule pass is repeated until the key stops changing, so the result is
    always a fixed point of this function.
    """
    if is_blank(surface):
        raise NormalizationError("cannot normalize an empty entity")
    key = _normalize_once(surface)
    while True:
        again = _normalize_once(key)
        if again == key:
            return key
        key = again


def load_alias_table(path: str | Path) -> dict[str, str]:
    """Read ``alias_key,canonical_key`` rows; both sides are normalized."""
    aliases: dict[str, str] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise NormalizationError(f"{path}:{lineno}: expected 'alias_key,canonical_key'")
            alias, canonical = (normalize_entity(cell) for cell in row)
            aliases[alias] = canonical
    return aliases


class Normalizer:
    """Rule normalization followed by an optional alias lookup."""

    def __init__(self, aliases: Mapping[str, str] | None = None):
        self.aliases = dict(aliases or {})

    @classmethod
    def from_file(cls, path: str | Path | None) -> "Normalizer":
        return cls(load_alias_table(path) if path else None)

    def __call__(self, surface: str) -> str:
        key = normalize_entity(surface)
        return self.aliases.get(key, key)
