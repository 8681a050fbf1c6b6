# %% [markdown]
# # Typing normalized entities with a random forest
#
# Keys are hashed into character n-gram counts. A forest of Gini trees then
# votes on one of five categories. The labeled set here is tiny and made up;
# suffixes such as "-vir" and "-itis" carry most of the signal.

# %%
import random

from biokg.typeclass import EntityCategory, ForestParams, evaluate, train_forest, train_test_split

rng = random.Random(0)
stems = ["remde", "favipi", "rito", "lopina", "sofosbu", "ganci", "oselta", "zana", "acy", "vala"]
roots = ["hepat", "arthr", "mening", "encephal", "dermat", "nephr", "gastr", "col", "bronch", "sinus"]
labeled = []
for i in range(120):
    labeled.append((f"{rng.choice(stems)}{rng.choice(['vir', 'navir', 'mivir'])}_{i}", EntityCategory.DRUG))
    labeled.append((f"{rng.choice(roots)}itis_{i}", EntityCategory.DISEASE))
    labeled.append((f"il{rng.randint(1, 40)}_gene_{i}", EntityCategory.GENE))

train_set, test_set = train_test_split(labeled, 0.2, seed=1)
forest = train_forest(train_set, ForestParams(n_trees=30, seed=7))
print("out-of-bag accuracy:", round(forest.model.oob_score_, 3))

# %% Held-out metrics per category.
pred = forest.predict_keys([k for k, _ in test_set])
for cat, m in evaluate(pred, [c for _, c in test_set]).items():
    if m.support:
        print(f"{cat.value:<14} P={m.precision:.2f} R={m.recall:.2f} F1={m.f1:.2f} n={m.support}")

# %% Unseen keys.
print([c.value for c in forest.predict_keys(["baloxavir", "pancreatitis", "il6_gene"])])
