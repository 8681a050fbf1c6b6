"""WordPiece merging and BIO span decoding for tagger output.

Labels arrive as ``B-MISC`` / ``I-MISC`` / ``O-MISC``; only the B/I/O part is
kept since a single entity class is tagged at this stage.
"""
from __future__ import annotations

import functools
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

SPECIAL_TOKENS = frozenset({"[CLS]", "[SEP]"})
CONTINUATION = "##"


class TaggingError(ValueError):
    pass


class Label(str, enum.Enum):
    B = "B"
    I = "I"  # noqa: E741
    O = "O"  # noqa: E741

    @classmethod
    def parse(cls, raw: str) -> "Label":
        return _parse_label(raw)

    def serialize(self, suffix: str = "MISC") -> str:
        return f"{self.value}-{suffix}"


@functools.lru_cache(maxsize=1024)
def _parse_label(raw: str) -> Label:
    head = raw.strip().split("-", 1)[0].upper()
    try:
        return Label(head)
    except ValueError:
        raise TaggingError(f"unknown label {raw!r}") from None


@dataclass(frozen=True)
class TaggedToken:
    text: str
    label: Label

    def __post_init__(self):
        if not self.text:
            raise TaggingError("token text must be nonempty")
        if not isinstance(self.label, Label):
            object.__setattr__(self, "label", Label.parse(self.label))


@dataclass
class TaggedSentence:
    tokens: list[TaggedToken] = field(default_factory=list)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[str]]) -> "TaggedSentence":
        return cls([TaggedToken(text, Label.parse(label)) for text, label in pairs])

    def to_pairs(self) -> list[list[str]]:
        return [[t.text, t.label.serialize()] for t in self.tokens]

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def labels(self) -> list[Label]:
        return [t.label for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class EntitySpan:
    surface: str
    token_start: int
    token_end: int  # inclusive
    doc_id: str = ""

    def __post_init__(self):
        if self.token_start > self.token_end:
            raise TaggingError(
                f"span start {self.token_start} after end {self.token_end}"
            )

    @property
    def bounds(self) -> tuple[int, int]:
        return (self.token_start, self.token_end)


def merge_wordpieces(sentence: TaggedSentence) -> TaggedSentence:
    """Glue ``##`` continuation pieces onto their predecessor.

    The merged word keeps the label of its first piece. ``[CLS]`` and
    ``[SEP]`` markers are dropped.
    """
    merged: list[TaggedToken] = []
    for position, token in enumerate(sentence.tokens):
        if token.text in SPECIAL_TOKENS:
            continue
        if token.text.startswith(CONTINUATION) and len(token.text) > len(CONTINUATION):
            if not merged:
                raise TaggingError(
                    f"dangling continuation {token.text!r} at token {position}"
                )
            head = merged[-1]
            merged[-1] = TaggedToken(head.text + token.text[len(CONTINUATION):], head.label)
        else:
            merged.append(token)
    return TaggedSentence(merged)


def _is_joining_hyphen(tokens: Sequence[str], i: int) -> bool:
    return (
        tokens[i] == "-"
        and 0 < i < len(tokens) - 1
        and tokens[i - 1].isalnum()
        and tokens[i + 1].isalnum()
    )


def detokenize(tokens: Sequence[str]) -> str:
    """Join tokens with spaces; a lone hyphen between alphanumerics binds tight.

    >>> detokenize(["COVID", "-", "19"])
    'COVID-19'
    >>> detokenize(["acute", "respiratory", "disease"])
    'acute respiratory disease'
    """
    out: list[str] = []
    glue_next = False
    for i, tok in enumerate(tokens):
        if _is_joining_hyphen(tokens, i):
            out.append(tok)
            glue_next = True
            continue
        if out and not glue_next:
            out.append(" ")
        out.append(tok)
        glue_next = False
    return "".join(out)


def decode_bio(sentence: TaggedSentence, doc_id: str = "") -> list[EntitySpan]:
    """Collect maximal ``B I*`` runs as entity spans.

    An ``I`` with no open span starts a new one instead of being dropped.
    """
    texts = sentence.texts
    spans: list[EntitySpan] = []
    start: int | None = None

    def close(end: int) -> None:
        spans.append(EntitySpan(detokenize(texts[start:end + 1]), start, end, doc_id))

    for i, label in enumerate(sentence.labels):
        if label is Label.B or (label is Label.I and start is None):
            if start is not None:
                close(i - 1)
            start = i
        elif label is Label.O and start is not None:
            close(i - 1)
            start = None
    if start is not None:
        close(len(texts) - 1)
    return spans


def encode_bio(spans: Iterable[EntitySpan | tuple[int, int]], n_tokens: int) -> list[Label]:
    labels = [Label.O] * n_tokens
    for span in sorted(
        (s.bounds if isinstance(s, EntitySpan) else tuple(s) for s in spans)
    ):
        start, end = span
        if not 0 <= start <= end < n_tokens:
            raise TaggingError(f"span {span} outside [0, {n_tokens})")
        if any(lab is not Label.O for lab in labels[start:end + 1]):
            raise TaggingError(f"span {span} overlaps another span")
        labels[start] = Label.B
        for i in range(start + 1, end + 1):
            labels[i] = Label.I
    return labels


def iter_conll(lines: Iterable[str], source: str = "<conll>") -> Iterator[TaggedSentence]:
    """Parse ``token<TAB>label`` lines; blank lines separate sentences."""
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if pairs:
                yield TaggedSentence.from_pairs(pairs)
                pairs = []
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise TaggingError(f"{source} line {lineno}: expected 'token<TAB>label', got {line!r}")
        try:
            Label.parse(parts[1])
        except TaggingError as exc:
            raise TaggingError(f"{source} line {lineno}: {exc}") from None
        pairs.append((parts[0], parts[1]))
    if pairs:
        yield TaggedSentence.from_pairs(pairs)


def read_conll(path: str | Path) -> list[TaggedSentence]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return list(iter_conll(fh, source=str(path)))


def write_conll(sentences: Iterable[TaggedSentence], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for sentence in sentences:
            for tok in sentence.tokens:
                fh.write(f"{tok.text}\t{tok.label.serialize()}\n")
            fh.write("\n")


def extract_surfaces(sentences: Iterable[TaggedSentence], doc_id: str = "") -> list[EntitySpan]:
    """Merge wordpieces and decode every sentence, in order."""
    spans: list[EntitySpan] = []
    for sentence in sentences:
        spans.extend(decode_bio(merge_wordpieces(sentence), doc_id))
    return spans
