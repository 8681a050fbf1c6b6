"""Glue between stages: documents to normalized entity-key sequences."""
from __future__ import annotations

from typing import Callable, Iterable, Iterator

from .corpus import Document
from .normalize import Normalizer, is_blank
from .tagging import extract_surfaces


def document_keys(doc: Document, normalizer: Callable[[str], str] | None = None) -> list[str]:
    """Normalized keys of every decoded entity mention, in text order."""
    norm = normalizer or Normalizer()
    return [norm(span.surface) for span in extract_surfaces(doc.annotations, doc.doc_id) if not is_blank(span.surface)]


def iter_document_keys(
    docs: Iterable[Document], normalizer: Callable[[str], str] | None = None
) -> Iterator[tuple[str, list[str]]]:
    norm = normalizer or Normalizer()
    for doc in docs:
        yield doc.doc_id, document_keys(doc, norm)
