"""Document model, JSON-lines corpus streaming, and author ranking."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .tagging import TaggedSentence, TaggingError

REQUIRED_FIELDS = ("doc_id", "title", "body", "authors")


class CorpusError(ValueError):
    pass


@dataclass
class Document:
    doc_id: str
    title: str
    body: str = ""
    authors: list[str] = field(default_factory=list)
    annotations: list[TaggedSentence] = field(default_factory=list)

    def __post_init__(self):
        if not self.doc_id:
            raise CorpusError("doc_id must be nonempty")

    @classmethod
    def from_json(cls, obj: dict) -> "Document":
        sentences = [TaggedSentence.from_pairs(s) for s in obj.get("annotations") or []]
        return cls(
            doc_id=str(obj["doc_id"]),
            title=obj["title"],
            body=obj["body"] or "",
            authors=list(obj["authors"]),
            annotations=sentences,
        )

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "body": self.body,
            "authors": self.authors,
            "annotations": [s.to_pairs() for s in self.annotations],
        }


@dataclass(frozen=True)
class AuthorRank:
    author: str
    article_count: int
    rank: int


def load_corpus(path: str | Path, format: str = "jsonl") -> Iterator[Document]:
    """Stream documents from a JSON-lines file, one object per line.

    Blank lines are skipped. Errors carry the 1-based line number.
    """
    if format != "jsonl":
        raise CorpusError(f"unsupported corpus format {format!r}")
    seen: set[str] = set()
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed JSON at line {lineno}: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise CorpusError(f"expected a JSON object at line {lineno}")
            for name in REQUIRED_FIELDS:
                if name not in obj or (name == "doc_id" and obj[name] in ("", None)):
                    raise CorpusError(f"missing {name} at line {lineno}")
            try:
                doc = Document.from_json(obj)
            except (TypeError, TaggingError, ValueError) as exc:
                raise CorpusError(f"invalid document at line {lineno}: {exc}") from None
            if doc.doc_id in seen:
                raise CorpusError(f"duplicate doc_id {doc.doc_id!r} at line {lineno}")
            seen.add(doc.doc_id)
            yield doc


def write_corpus(docs: Iterable[Document], path: str | Path) -> int:
    n = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False))
            fh.write("\n")
            n += 1
    return n


def count_authors(docs: Iterable[Document]) -> Counter:
    """Per-author article counts; an author listed twice on one paper counts once.

    Counters from disjoint shards can be summed before ranking.
    """
    counts: Counter = Counter()
    for doc in docs:
        counts.update(set(doc.authors))
    return counts


def rank_authors(docs: Iterable[Document] | Counter) -> list[AuthorRank]:
    counts = docs if isinstance(docs, Counter) else count_authors(docs)
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [AuthorRank(author, count, i) for i, (author, count) in enumerate(ordered, start=1)]
