import json
import random
from collections import Counter

import pytest

from biokg.corpus import (
    CorpusError,
    Document,
    count_authors,
    load_corpus,
    rank_authors,
    write_corpus,
)


def _doc(doc_id, authors):
    return Document(doc_id=doc_id, title=f"title {doc_id}", authors=authors)


def test_empty_file_yields_nothing(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert list(load_corpus(path)) == []


def test_three_line_fixture_in_order(three_doc_corpus):
    docs = list(load_corpus(three_doc_corpus))
    assert [d.doc_id for d in docs] == ["D1", "D2", "D3"]
    assert docs[0].authors == ["Perlman, Stanley", "Drosten, Christian"]
    assert docs[1].annotations[0].texts == ["Remdesivir", "with", "Favipiravir"]


def test_load_is_lazy(tmp_path):
    path = tmp_path / "c.jsonl"
    good = json.dumps({"doc_id": "a", "title": "", "body": "", "authors": []})
    path.write_text(good + "\n{not json\n")
    stream = load_corpus(path)
    assert next(stream).doc_id == "a"
    with pytest.raises(CorpusError, match="line 2"):
        next(stream)


def test_missing_doc_id_reports_line(tmp_path):
    path = tmp_path / "c.jsonl"
    rows = [
        {"doc_id": "a", "title": "", "body": "", "authors": []},
        {"title": "", "body": "", "authors": []},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows))
    with pytest.raises(CorpusError, match="missing doc_id at line 2"):
        list(load_corpus(path))


def test_duplicate_doc_id_named(tmp_path):
    path = tmp_path / "c.jsonl"
    row = json.dumps({"doc_id": "dup-7", "title": "", "body": "", "authors": []})
    path.write_text(row + "\n" + row + "\n")
    with pytest.raises(CorpusError, match="dup-7"):
        list(load_corpus(path))


def test_round_trip_write(tmp_path, three_doc_corpus):
    docs = list(load_corpus(three_doc_corpus))
    out = tmp_path / "copy.jsonl"
    assert write_corpus(docs, out) == 3
    assert [d.to_json() for d in load_corpus(out)] == [d.to_json() for d in docs]


def test_rank_example():
    docs = [_doc("1", ["A", "B"]), _doc("2", ["A"]), _doc("3", ["C"])]
    ranks = rank_authors(docs)
    assert [(r.author, r.article_count, r.rank) for r in ranks] == [
        ("A", 2, 1), ("B", 1, 2), ("C", 1, 3),
    ]


def test_rank_empty():
    assert rank_authors([]) == []


def test_repeated_author_counts_once_per_document():
    ranks = rank_authors([_doc("1", ["A", "A"]), _doc("2", ["A"])])
    assert ranks[0].article_count == 2


def test_author_strings_verbatim():
    ranks = rank_authors([_doc("1", ["perlman, stanley"]), _doc("2", ["Perlman, Stanley"])])
    assert {r.author for r in ranks} == {"perlman, stanley", "Perlman, Stanley"}


def _random_docs(rng, n):
    names = [f"Author {c}" for c in "ABCDEFGHIJ"]
    return [_doc(str(i), rng.choices(names, k=rng.randint(0, 5))) for i in range(n)]


@pytest.mark.parametrize("seed", range(20))
def test_rank_invariants(seed):
    rng = random.Random(seed)
    docs = _random_docs(rng, rng.randint(0, 30))
    ranks = rank_authors(docs)
    # brute-force count
    expected = Counter()
    for d in docs:
        for a in set(d.authors):
            expected[a] += 1
    assert {r.author: r.article_count for r in ranks} == dict(expected)
    assert sum(r.article_count for r in ranks) == sum(len(set(d.authors)) for d in docs)
    assert [r.rank for r in ranks] == list(range(1, len(ranks) + 1))
    order = [(-r.article_count, r.author) for r in ranks]
    assert order == sorted(order)
    shuffled = docs[:]
    rng.shuffle(shuffled)
    assert rank_authors(shuffled) == ranks
    # shard counts are additive
    half = len(docs) // 2
    merged = count_authors(docs[:half]) + count_authors(docs[half:])
    assert rank_authors(merged) == ranks
