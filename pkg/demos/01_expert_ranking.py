# %% [markdown]
# # Ranking authors by article count
#
# Each document lists its authors. An author is credited once per document,
# and ties on count are broken alphabetically so ranks are stable.

# %%
import tempfile
from pathlib import Path

from biokg.corpus import Document, load_corpus, rank_authors, write_corpus

docs = [
    Document("P1", "Remdesivir in vitro", "", ["Sheahan, T.", "Baric, R."]),
    Document("P2", "Coronavirus polymerase inhibitors", "", ["Baric, R.", "Denison, M."]),
    Document("P3", "Favipiravir trial design", "", ["Cai, Q."]),
    Document("P4", "MERS treatment in mice", "", ["Sheahan, T.", "Baric, R.", "Baric, R."]),
]

# %% Round-trip through JSONL, the format the CLI reads.
path = Path(tempfile.mkdtemp()) / "papers.jsonl"
write_corpus(docs, path)
ranks = rank_authors(load_corpus(path))

for r in ranks:
    print(f"{r.rank:>2}  {r.article_count}  {r.author}")

# %% The duplicated author on P4 counts once.
assert ranks[0].author == "Baric, R." and ranks[0].article_count == 3
