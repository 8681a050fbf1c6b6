import json
import random

import numpy as np
import pytest

from biokg.typeclass import (
    CATEGORIES,
    EntityCategory,
    Forest,
    ForestParams,
    RandomForest,
    Tree,
    TypingError,
    char_ngrams,
    evaluate,
    f1_score,
    featurize,
    featurize_many,
    predict,
    read_labeled_csv,
    string_hash,
    train_forest,
    train_test_split,
)

S, G, DIS, DRUG, GM = CATEGORIES


@pytest.fixture(scope="module")
def two_class(data_dir):
    return read_labeled_csv(data_dir / "labeled_two_class.csv")


# published FNV-1a 32-bit test vectors
@pytest.mark.parametrize(
    "text, value", [("", 0x811C9DC5), ("a", 0xE40C292C), ("foobar", 0xBF9CF968)]
)
def test_string_hash_vectors(text, value):
    assert string_hash(text) == value


class TestFeaturize:
    def test_deterministic(self):
        assert np.array_equal(featurize("remdesivir"), featurize("remdesivir"))

    def test_bigrams(self):
        assert char_ngrams("abc", 2) == ["ab", "bc"]
        assert char_ngrams("abc", 4) == []

    def test_layout(self):
        v = featurize("respiratory_illness", 64)
        assert v.shape == (66,)
        assert np.all(v >= 0)
        assert v[64] == 2 and v[65] == len("respiratory_illness")
        # 2-, 3- and 4-grams of a 19-char key
        assert v[:64].sum() == 18 + 17 + 16

    def test_abc_abd_differ(self):
        # buckets computed directly from the hash
        def buckets(key, dim):
            out = {}
            for n in (2, 3, 4):
                for i in range(len(key) - n + 1):
                    b = string_hash(key[i:i + n]) % dim
                    out[b] = out.get(b, 0) + 1
            return out

        for dim in (64, 128, 1024):
            assert buckets("abc", dim) != buckets("abd", dim)
            assert not np.array_equal(featurize("abc", dim), featurize("abd", dim))

    def test_min_dim(self):
        with pytest.raises(TypingError):
            featurize("x", 8)


def separable(n=100, n_features=6, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.uniform(0, 1, size=(n, n_features)) + 2.0 * y[:, None]
    return X, y


class TestForest:
    def test_separable_single_tree(self):
        X, y = separable()
        rf = RandomForest(ForestParams(n_trees=1, max_depth=None, seed=3), n_classes=2).fit(X, y)
        assert np.mean(rf.predict(X) == y) == 1.0

    def test_pure_tree_recovers_training_labels(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 5))
        y = rng.integers(0, 3, size=60)
        rf = RandomForest(ForestParams(n_trees=1, max_depth=None, bootstrap=False), n_classes=3).fit(X, y)
        assert np.array_equal(rf.predict(X), y)

    def test_leaf_counts_sum_to_samples(self):
        X, y = separable()
        rf = RandomForest(ForestParams(n_trees=3, max_depth=4), n_classes=2).fit(X, y)
        for tree in rf.trees:
            assert tree.counts[0].sum() == len(y)
            internal = tree.feature >= 0
            assert np.array_equal(
                tree.counts[internal], tree.counts[tree.left[internal]] + tree.counts[tree.right[internal]]
            )

    def test_degenerate(self):
        with pytest.raises(TypingError, match="degenerate"):
            train_forest([("a", DRUG), ("b", DRUG)])

    def test_deterministic(self, two_class):
        p = ForestParams(n_trees=10, seed=5)
        keys = [k for k, _ in two_class]
        a = train_forest(two_class, p).predict_keys(keys)
        b = train_forest(two_class, p).predict_keys(keys)
        assert a == b

    def test_shuffle_invariant(self, two_class):
        p = ForestParams(n_trees=10, seed=5)
        shuffled = two_class[:]
        random.Random(0).shuffle(shuffled)
        probe = [k for k, _ in two_class] + ["zanavir_x", "neuritis_q", "influenza-like-disease-17"]
        fa, fb = train_forest(two_class, p), train_forest(shuffled, p)
        assert fa.predict_keys(probe) == fb.predict_keys(probe)
        assert json.dumps(fa.to_json()) == json.dumps(fb.to_json())

    def test_oob_regression(self, two_class):
        forest = train_forest(two_class, ForestParams(n_trees=25, seed=42))
        assert forest.model.oob_score_ > 0.8

    def test_frozen_prediction(self, two_class):
        forest = train_forest(two_class, ForestParams(n_trees=25, seed=42))
        assert predict(forest, "influenza-like-disease-17") is DIS

    def test_adding_a_tree_keeps_unanimous_votes(self, two_class):
        small = train_forest(two_class, ForestParams(n_trees=5, seed=9))
        big = train_forest(two_class, ForestParams(n_trees=6, seed=9))
        probe = ["influenza-like-disease-17", "oseltamivir", "pneumonitis", "adalimumab_x",
                 "hepatoma_2", "cardiovir", "lymphitis", "sarcocillin"]
        X = featurize_many(probe)
        votes = small.model.votes(X)
        unanimous = votes.max(axis=1) == 5
        assert unanimous.any()
        assert np.array_equal(small.model.predict(X)[unanimous], big.model.predict(X)[unanimous])

    def test_vote_ties_go_to_earlier_category(self):
        def leaf(counts):
            return Tree(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]), np.array([counts]))

        rf = RandomForest()
        # one tree votes drug, one votes gene; gene is declared first
        rf.trees = [leaf([0, 0, 0, 1, 0]), leaf([0, 1, 0, 0, 0])]
        assert rf.predict(np.zeros((1, 3)))[0] == G.index
        # a tied leaf also resolves to the earlier category
        rf.trees = [leaf([0, 0, 2, 2, 0])]
        assert rf.predict(np.zeros((1, 3)))[0] == DIS.index

    def test_json_round_trip(self, two_class, tmp_path):
        forest = train_forest(two_class, ForestParams(n_trees=5, seed=1), dim=256)
        path = tmp_path / "forest.json"
        forest.save(path)
        loaded = Forest.load(path)
        keys = [k for k, _ in two_class][:50] + ["unseen_key"]
        assert loaded.predict_keys(keys) == forest.predict_keys(keys)
        doc = json.loads(path.read_text())
        assert doc["version"] == 1 and doc["dim"] == 256 and len(doc["trees"]) == 5

    def test_balanced_weights_option(self, two_class):
        skewed = [kv for kv in two_class if kv[1] is DRUG] + [kv for kv in two_class if kv[1] is DIS][:10]
        forest = train_forest(skewed, ForestParams(n_trees=5, class_weight="balanced"))
        assert forest.model.class_weight_ is not None
        assert forest.model.class_weight_[DIS.index] > forest.model.class_weight_[DRUG.index]


def confusion_lists(p, r, cat, other):
    """Predictions/gold with precision p/100 and recall r/100 for ``cat``."""
    tp = p * r
    fp = 100 * r - tp
    fn = 100 * p - tp
    pred = [cat] * tp + [cat] * fp + [other] * fn
    gold = [cat] * tp + [other] * fp + [cat] * fn
    return pred, gold


PRINTED_F1_ROWS = [  # category, precision, recall, printed F1
    (S, 72, 31, 0.43),
    (DIS, 94, 61, 0.74),
    (G, 95, 64, 0.76),
    (DRUG, 66, 99, 0.79),
    (GM, 50, 17, 0.25),
]


class TestEvaluate:
    @pytest.mark.parametrize("cat, p, r, f1", PRINTED_F1_ROWS)
    def test_printed_f1_rows(self, cat, p, r, f1):
        other = DRUG if cat is not DRUG else G
        pred, gold = confusion_lists(p, r, cat, other)
        m = evaluate(pred, gold)[cat]
        assert m.precision == pytest.approx(p / 100, abs=1e-12)
        assert m.recall == pytest.approx(r / 100, abs=1e-12)
        assert abs(m.f1 - f1) <= 0.005

    def test_f1_zero(self):
        assert f1_score(0.0, 0.0) == 0.0

    def test_perfect(self):
        gold = [S, G, G, DRUG]
        metrics = evaluate(gold, gold)
        for cat in (S, G, DRUG):
            assert (metrics[cat].precision, metrics[cat].recall, metrics[cat].f1) == (1.0, 1.0, 1.0)
        assert metrics[GM].support == 0 and metrics[GM].f1 == 0.0

    def test_length_mismatch(self):
        with pytest.raises(TypingError, match="mismatch"):
            evaluate([S], [S, G])

    def test_harmonic_mean(self):
        rng = random.Random(0)
        pred = [rng.choice(CATEGORIES) for _ in range(300)]
        gold = [rng.choice(CATEGORIES) for _ in range(300)]
        for m in evaluate(pred, gold).values():
            assert m.f1 == pytest.approx(f1_score(m.precision, m.recall))
            assert 0 <= m.precision <= 1 and 0 <= m.recall <= 1


def test_split_is_deterministic_and_partitions(two_class):
    train, test = train_test_split(two_class, 0.2, seed=3)
    assert len(test) == 40 and len(train) == 160
    assert sorted(train + test) == sorted(two_class)
    shuffled = two_class[::-1]
    assert train_test_split(shuffled, 0.2, seed=3) == (train, test)


def test_category_parse():
    assert EntityCategory.parse("Gene mutation") is GM
    assert EntityCategory.parse("diseases") is DIS
    with pytest.raises(TypingError):
        EntityCategory.parse("chemical")
