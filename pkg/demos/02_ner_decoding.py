# %% [markdown]
# # From BIO labels to entity surfaces
#
# A tagger emits one label per WordPiece token. Continuation pieces ("##")
# are glued back onto their word, then maximal B I* runs become entities.

# %%
from biokg.normalize import normalize_entity
from biokg.tagging import TaggedSentence, decode_bio, detokenize, merge_wordpieces

pairs = [
    ("[CLS]", "O"), ("The", "O"), ("AC", "B-MISC"), ("##E", "I-MISC"), ("##2", "I-MISC"),
    ("receptor", "O"), ("binds", "O"), ("SARS", "B-MISC"), ("-", "I-MISC"), ("CoV", "I-MISC"),
    ("-", "I-MISC"), ("2", "I-MISC"), ("in", "O"), ("lung", "B-MISC"), ("cells", "I-MISC"),
    (".", "O"), ("[SEP]", "O"),
]
sentence = TaggedSentence.from_pairs(pairs)

# %% Merge the wordpieces first; the merged word keeps the first piece's label.
merged = merge_wordpieces(sentence)
print(merged.texts)

# %% Decode the spans. Hyphens between alphanumerics bind tightly.
for span in decode_bio(merged, doc_id="demo"):
    print(span.token_start, span.token_end, repr(span.surface), "->", normalize_entity(span.surface))

# %% A stray I with nothing open still starts an entity.
stray = TaggedSentence.from_pairs([("of", "O"), ("Ebola", "I-MISC"), ("virus", "I-MISC")])
print([s.surface for s in decode_bio(stray)])
print(detokenize(["COVID", "-", "19"]))
