"""Bio-entity typing with a from-scratch random forest over hashed char n-grams."""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FOREST_FORMAT = "biokg-forest"
FOREST_VERSION = 1
NGRAM_SIZES = (2, 3, 4)
DEFAULT_DIM = 1024
_HASH_MULT = 0x01000193  # FNV prime, used as a plain multiplicative hash
_HASH_MASK = 0xFFFFFFFF


class TypingError(ValueError):
    pass


class EntityCategory(str, enum.Enum):
    # declaration order is the tie-break order for votes
    SPECIES = "species"
    GENE = "gene"
    DISEASE = "disease"
    DRUG = "drug"
    GENE_MUTATION = "gene_mutation"

    @classmethod
    def parse(cls, raw: str) -> "EntityCategory":
        text = raw.strip().lower().replace(" ", "_")
        aliases = {"diseases": "disease", "drugs": "drug", "genes": "gene"}
        try:
            return cls(aliases.get(text, text))
        except ValueError:
            raise TypingError(f"unknown entity category {raw!r}") from None

    @property
    def index(self) -> int:
        return CATEGORIES.index(self)


CATEGORIES: tuple[EntityCategory, ...] = tuple(EntityCategory)


# ---------------------------------------------------------------------------
# features


def string_hash(text: str) -> int:
    h = 0x811C9DC5
    for ch in text.encode("utf-8"):
        h = ((h ^ ch) * _HASH_MULT) & _HASH_MASK
    return h


def char_ngrams(key: str, n: int) -> list[str]:
    return [key[i:i + n] for i in range(len(key) - n + 1)]


def featurize(key: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Hashed 2/3/4-gram counts in ``dim`` buckets, then token count and length."""
    if dim < 16:
        raise TypingError("feature dim must be at least 16")
    vec = np.zeros(dim + 2, dtype=np.float64)
    for n in NGRAM_SIZES:
        for gram in char_ngrams(key, n):
            vec[string_hash(gram) % dim] += 1.0
    vec[dim] = len([t for t in key.split("_") if t])
    vec[dim + 1] = len(key)
    return vec


def featurize_many(keys: Sequence[str], dim: int = DEFAULT_DIM) -> np.ndarray:
    X = np.zeros((len(keys), dim + 2), dtype=np.float64)
    for i, key in enumerate(keys):
        X[i] = featurize(key, dim)
    return X


# ---------------------------------------------------------------------------
# trees


@dataclass
class Tree:
    """Flat array tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) sample counts per node

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray, class_weight: np.ndarray | None = None) -> np.ndarray:
        dist = self.counts[self.apply(X)]
        if class_weight is not None:
            dist = dist * class_weight
        # argmax picks the lowest class index on ties
        return np.argmax(dist, axis=1)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def to_json(self, node: int = 0) -> dict:
        if self.feature[node] < 0:
            return {"counts": [int(c) for c in self.counts[node]]}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_json(int(self.left[node])),
            "right": self.to_json(int(self.right[node])),
        }

    @classmethod
    def from_json(cls, root: dict, n_classes: int) -> "Tree":
        builder = _TreeBuilder(n_classes)

        def visit(rec: dict) -> int:
            if "counts" in rec:
                return builder.leaf(np.asarray(rec["counts"], dtype=np.int64))
            node = builder.split_placeholder(rec["feature"], rec["threshold"])
            left = visit(rec["left"])
            right = visit(rec["right"])
            builder.link(node, left, right)
            return node

        visit(root)
        return builder.finish()


class _TreeBuilder:
    def __init__(self, n_classes: int):
        self.n_classes = n_classes
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.counts: list[np.ndarray] = []

    def _new(self, feature, threshold, counts) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(counts)
        return len(self.feature) - 1

    def leaf(self, counts: np.ndarray) -> int:
        return self._new(-1, 0.0, counts)

    def split_placeholder(self, feature: int, threshold: float) -> int:
        return self._new(int(feature), float(threshold), None)

    def link(self, node: int, left: int, right: int) -> None:
        self.left[node] = left
        self.right[node] = right
        if self.counts[node] is None:
            self.counts[node] = self.counts[left] + self.counts[right]

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            counts=np.vstack(self.counts).astype(np.int64),
        )


def gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float(np.sum(p * p))


def _best_split(X, Y1h, idx, features, sample_weight):
    """Best (feature, threshold, weighted impurity) among ``features``, or None.

    Impurity is the size-weighted child Gini sum; earlier features and lower
    thresholds win ties.
    """
    best = None
    w = sample_weight[idx][:, None]
    for f in features:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        valid = np.nonzero(xs[1:] > xs[:-1])[0]
        if len(valid) == 0:
            continue
        cum = np.cumsum(Y1h[idx][order] * w[order], axis=0)
        total = cum[-1]
        left = cum[valid]
        right = total - left
        nl = left.sum(axis=1)
        nr = right.sum(axis=1)
        gl = nl - np.sum(left * left, axis=1) / np.maximum(nl, 1e-300)
        gr = nr - np.sum(right * right, axis=1) / np.maximum(nr, 1e-300)
        score = gl + gr
        j = int(np.argmin(score))
        if best is None or score[j] < best[2] - 1e-12:
            lo, hi = xs[valid[j]], xs[valid[j] + 1]
            threshold = 0.5 * (lo + hi)
            if not lo <= threshold < hi:  # midpoint rounded onto hi
                threshold = lo
            best = (int(f), float(threshold), float(score[j]))
    return best


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_idx: np.ndarray,
    n_classes: int,
    rng: np.random.Generator,
    max_depth: int | None = None,
    max_features: int | None = None,
    min_samples_split: int = 2,
    class_weight: np.ndarray | None = None,
) -> Tree:
    """Grow one CART tree with Gini splits over ``X[sample_idx]``.

    ``sample_idx`` may repeat rows (bootstrap). At each node ``max_features``
    candidate features are drawn; if none of them can split the node, the
    remaining features are tried in random order before giving up.
    """
    n_features = X.shape[1]
    m = n_features if max_features is None else max(1, min(max_features, n_features))
    Y1h = np.eye(n_classes, dtype=np.float64)[y]
    weights = np.ones(len(y)) if class_weight is None else class_weight[y]
    builder = _TreeBuilder(n_classes)

    def grow(idx: np.ndarray, depth: int) -> int:
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.int64)
        pure = np.count_nonzero(counts) <= 1
        if pure or len(idx) < min_samples_split or (max_depth is not None and depth >= max_depth):
            return builder.leaf(counts)
        perm = rng.permutation(n_features)
        split = _best_split(X, Y1h, idx, perm[:m], weights)
        if split is None and m < n_features:
            # fall back to the unsampled features one at a time
            for f in perm[m:]:
                split = _best_split(X, Y1h, idx, [f], weights)
                if split is not None:
                    break
        if split is None:
            return builder.leaf(counts)
        feature, threshold, _ = split
        node = builder.split_placeholder(feature, threshold)
        go_left = X[idx, feature] <= threshold
        left = grow(idx[go_left], depth + 1)
        right = grow(idx[~go_left], depth + 1)
        builder.link(node, left, right)
        return node

    grow(np.asarray(sample_idx, dtype=np.int64), 0)
    return builder.finish()


# ---------------------------------------------------------------------------
# forest


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = 16
    seed: int = 42
    bootstrap: bool = True
    max_features: str | int | None = "sqrt"
    class_weight: str | None = None  # None or "balanced"
    min_samples_split: int = 2

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features is None:
            return n_features
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        return int(self.max_features)


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    # row order must not matter: sort rows by (label, features...)
    keys = [X[:, j] for j in range(X.shape[1] - 1, -1, -1)] + [y]
    return np.lexsort(keys)


class RandomForest:
    """Bagged Gini trees with per-split feature subsampling and majority vote.

    Training rows are put in a canonical order first and every tree draws its
    bootstrap from ``default_rng([seed, tree_index])``, so the fitted forest
    depends only on the multiset of rows and the seed.
    """

    def __init__(self, params: ForestParams | None = None, n_classes: int = len(CATEGORIES)):
        self.params = params or ForestParams()
        self.n_classes = n_classes
        self.trees: list[Tree] = []
        self.oob_score_: float | None = None
        self.n_features_: int | None = None
        self.class_weight_: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: Sequence[int]) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(X) != len(y) or len(y) == 0:
            raise TypingError("need equal, nonzero numbers of rows and labels")
        if len(np.unique(y)) < 2:
            raise TypingError("degenerate training set: fewer than 2 distinct categories")
        if y.min() < 0 or y.max() >= self.n_classes:
            raise TypingError("label index out of range")
        order = _canonical_order(X, y)
        X, y = X[order], y[order]
        p = self.params
        n = len(y)
        self.n_features_ = X.shape[1]
        m = p.resolve_max_features(X.shape[1])
        class_weight = None
        if p.class_weight == "balanced":
            freq = np.bincount(y, minlength=self.n_classes).astype(np.float64)
            class_weight = np.where(freq > 0, n / (np.count_nonzero(freq) * np.maximum(freq, 1)), 0.0)
        self.class_weight_ = class_weight

        self.trees = []
        oob_votes = np.zeros((n, self.n_classes), dtype=np.int64)
        for t in range(p.n_trees):
            rng = np.random.default_rng([p.seed, t])
            sample = rng.integers(0, n, size=n) if p.bootstrap else np.arange(n)
            tree = build_tree(
                X, y, sample, self.n_classes, rng,
                max_depth=p.max_depth, max_features=m,
                min_samples_split=p.min_samples_split, class_weight=class_weight,
            )
            self.trees.append(tree)
            if p.bootstrap:
                oob = np.ones(n, dtype=bool)
                oob[sample] = False
                if oob.any():
                    oob_votes[np.nonzero(oob)[0], tree.predict(X[oob], class_weight)] += 1
        seen = oob_votes.sum(axis=1) > 0
        if p.bootstrap and seen.any():
            self.oob_score_ = float(np.mean(np.argmax(oob_votes[seen], axis=1) == y[seen]))
        return self

    def votes(self, X: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise TypingError("forest is not trained")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.zeros((len(X), self.n_classes), dtype=np.int64)
        rows = np.arange(len(X))
        for tree in self.trees:
            out[rows, tree.predict(X, self.class_weight_)] += 1
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.votes(X), axis=1)


@dataclass
class Forest:
    """A trained category classifier over normalized keys."""

    model: RandomForest
    dim: int = DEFAULT_DIM

    @property
    def trees(self) -> list[Tree]:
        return self.model.trees

    @property
    def params(self) -> ForestParams:
        return self.model.params

    def predict_keys(self, keys: Sequence[str]) -> list[EntityCategory]:
        if not keys:
            return []
        pred = self.model.predict(featurize_many(keys, self.dim))
        return [CATEGORIES[i] for i in pred]

    def to_json(self) -> dict:
        return {
            "format": FOREST_FORMAT,
            "version": FOREST_VERSION,
            "dim": self.dim,
            "categories": [c.value for c in CATEGORIES],
            "params": asdict(self.params),
            "oob_score": self.model.oob_score_,
            "class_weight": None if self.model.class_weight_ is None else self.model.class_weight_.tolist(),
            "trees": [t.to_json() for t in self.model.trees],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Forest":
        if doc.get("format") != FOREST_FORMAT:
            raise TypingError("not a forest document")
        if doc.get("version") != FOREST_VERSION:
            raise TypingError(f"unsupported forest version {doc.get('version')!r}")
        if doc["categories"] != [c.value for c in CATEGORIES]:
            raise TypingError("category list does not match this build")
        model = RandomForest(ForestParams(**doc["params"]))
        model.trees = [Tree.from_json(t, len(CATEGORIES)) for t in doc["trees"]]
        model.oob_score_ = doc.get("oob_score")
        if doc.get("class_weight") is not None:
            model.class_weight_ = np.asarray(doc["class_weight"], dtype=np.float64)
        model.n_features_ = doc["dim"] + 2
        return cls(model=model, dim=doc["dim"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Forest":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def train_forest(
    labeled: Iterable[tuple[str, EntityCategory | str]],
    params: ForestParams | None = None,
    dim: int = DEFAULT_DIM,
) -> Forest:
    pairs = [(key, EntityCategory.parse(cat) if isinstance(cat, str) else cat) for key, cat in labeled]
    if len({cat for _, cat in pairs}) < 2:
        raise TypingError("degenerate training set: fewer than 2 distinct categories")
    keys = [k for k, _ in pairs]
    y = np.array([cat.index for _, cat in pairs], dtype=np.int64)
    model = RandomForest(params).fit(featurize_many(keys, dim), y)
    return Forest(model=model, dim=dim)


def predict(forest: Forest, key: str) -> EntityCategory:
    return forest.predict_keys([key])[0]


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate(
    pred: Sequence[EntityCategory], gold: Sequence[EntityCategory]
) -> dict[EntityCategory, ClassMetrics]:
    """One-vs-rest precision, recall and F1 for every category."""
    if len(pred) != len(gold):
        raise TypingError(f"length mismatch: {len(pred)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise TypingError("cannot evaluate an empty prediction set")
    p = np.array([EntityCategory(c).index for c in pred])
    g = np.array([EntityCategory(c).index for c in gold])
    out = {}
    for cat in CATEGORIES:
        i = cat.index
        tp = int(np.sum((p == i) & (g == i)))
        n_pred = int(np.sum(p == i))
        support = int(np.sum(g == i))
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / support if support else 0.0
        out[cat] = ClassMetrics(precision, recall, f1_score(precision, recall), support)
    return out


def train_test_split(labeled: Sequence, test_fraction: float = 0.2, seed: int = 42):
    if not 0.0 < test_fraction < 1.0:
        raise TypingError("test_fraction must be in (0, 1)")
    items = sorted(labeled, key=lambda kv: (kv[0], str(kv[1])))
    perm = np.random.default_rng(seed).permutation(len(items))
    n_test = int(round(len(items) * test_fraction))
    test = [items[i] for i in perm[:n_test]]
    train = [items[i] for i in perm[n_test:]]
    return train, test


def read_labeled_csv(path: str | Path) -> list[tuple[str, EntityCategory]]:
    """Read ``key,category`` rows. A leading ``key,category`` header is skipped."""
    rows = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == ["key", "category"]:
                continue
            if len(row) != 2:
                raise TypingError(f"{path}:{lineno}: expected 'key,category'")
            try:
                rows.append((row[0].strip(), EntityCategory.parse(row[1])))
            except TypingError as exc:
                raise TypingError(f"{path}:{lineno}: {exc}") from None
    return rows


def write_metrics_csv(metrics: dict[EntityCategory, ClassMetrics], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["category", "precision", "recall", "f1", "support"])
        for cat, m in metrics.items():
            w.writerow([cat.value, f"{m.precision:.4f}", f"{m.recall:.4f}", f"{m.f1:.4f}", m.support])
