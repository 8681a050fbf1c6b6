"""Skip-gram with negative sampling over per-document entity-key sequences.

Every document contributes its ordered list of normalized entity keys; each
key is trained to predict the keys within ``window`` positions of it, against
``negatives`` noise keys drawn from the unigram distribution raised to
``neg_table_power``. Updates run in a numba kernel; single-worker training is
bit-for-bit reproducible for a given seed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numba
import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingError(ValueError):
    pass


@dataclass
class TrainParams:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_lr_fraction: float = 1e-4
    neg_table_power: float = 0.75
    neg_table_size: int = 1_000_000
    min_count: int = 1
    subsample: float = 0.0  # 0 disables frequent-key downsampling
    seed: int = 1
    workers: int = 1

    def validate(self) -> None:
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise EmbeddingError("dim, window, negatives and epochs must all be >= 1")
        if not self.initial_lr > 0:
            raise EmbeddingError("initial_lr must be positive")
        if self.min_count < 1:
            raise EmbeddingError("min_count must be >= 1")
        if self.workers < 1:
            raise EmbeddingError("workers must be >= 1")


# ---------------------------------------------------------------------------
# vocabulary and noise table


@dataclass
class Vocabulary:
    keys: list[str]
    freqs: np.ndarray
    min_count: int = 1
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {k: i for i, k in enumerate(self.keys)}

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: str) -> bool:
        return key in self.index

    def frequency(self, key: str) -> int:
        return int(self.freqs[self.index[key]])


def build_vocab(sequences: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Count keys, drop rare ones, index by descending frequency then key."""
    if min_count < 1:
        raise EmbeddingError("min_count must be >= 1")
    counts: dict[str, int] = {}
    for seq in sequences:
        for key in seq:
            counts[key] = counts.get(key, 0) + 1
    kept = sorted(((k, c) for k, c in counts.items() if c >= min_count), key=lambda kv: (-kv[1], kv[0]))
    if not kept:
        raise EmbeddingError(f"empty vocabulary (min_count={min_count})")
    return Vocabulary([k for k, _ in kept], np.array([c for _, c in kept], dtype=np.int64), min_count)


def build_neg_table(vocab: Vocabulary, power: float = 0.75, table_size: int = 1_000_000) -> np.ndarray:
    """Index table where key ``i`` fills a share ``freq_i**power / sum`` of slots."""
    if table_size < 10 * len(vocab):
        raise EmbeddingError(f"table_size {table_size} < 10 x vocabulary size {len(vocab)}")
    weights = vocab.freqs.astype(np.float64) ** power
    cum = np.cumsum(weights / weights.sum())
    slots = (np.arange(table_size, dtype=np.float64) + 0.5) / table_size
    table = np.searchsorted(cum, slots, side="right")
    return np.minimum(table, len(vocab) - 1).astype(np.int32)


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _softplus(x):
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@numba.njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@numba.njit(cache=True)
def _pair_update(W, C, center, context, negs, n_negs, lr, neu1e, coef):
    """One SGD step on -log s(w.c+) - sum log s(-w.c-); returns the loss before it.

    All dot products and the input-vector gradient use pre-update values, so
    the step is an exact gradient step even when a negative repeats.
    """
    dim = W.shape[1]
    f = 0.0
    for d in range(dim):
        f += W[center, d] * C[context, d]
    loss = _softplus(-f)
    coef[0] = _sigmoid(f) - 1.0
    for q in range(n_negs):
        n = negs[q]
        f = 0.0
        for d in range(dim):
            f += W[center, d] * C[n, d]
        loss += _softplus(f)
        coef[q + 1] = _sigmoid(f)
    for d in range(dim):
        neu1e[d] = coef[0] * C[context, d]
    for q in range(n_negs):
        n = negs[q]
        g = coef[q + 1]
        for d in range(dim):
            neu1e[d] += g * C[n, d]
    g = lr * coef[0]
    for d in range(dim):
        C[context, d] -= g * W[center, d]
    for q in range(n_negs):
        n = negs[q]
        g = lr * coef[q + 1]
        for d in range(dim):
            C[n, d] -= g * W[center, d]
    for d in range(dim):
        W[center, d] -= lr * neu1e[d]
    return loss


@numba.njit(cache=True)
def _seed(seed):
    np.random.seed(seed)


@numba.njit(cache=True)
def _train_docs(tokens, starts, doc_lo, doc_hi, W, C, table, keep_prob, window, negatives,
                lr0, lr_floor, words_done, total_words):
    dim = W.shape[1]
    neu1e = np.zeros(dim, dtype=W.dtype)
    coef = np.zeros(negatives + 1, dtype=np.float64)
    negs = np.zeros(negatives, dtype=np.int64)
    longest = 1
    for doc in range(doc_lo, doc_hi):
        longest = max(longest, starts[doc + 1] - starts[doc])
    buf = np.zeros(longest, dtype=np.int64)
    n_table = table.shape[0]
    loss = 0.0
    pairs = 0
    for doc in range(doc_lo, doc_hi):
        s = starts[doc]
        e = starts[doc + 1]
        words_done += e - s
        m = 0
        for i in range(s, e):
            t = tokens[i]
            if keep_prob[t] < 1.0 and np.random.random() > keep_prob[t]:
                continue
            buf[m] = t
            m += 1
        if m < 2:
            continue
        lr = lr0 * max(lr_floor, 1.0 - words_done / total_words)
        for i in range(m):
            center = buf[i]
            lo = max(0, i - window)
            hi = min(m, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                context = buf[j]
                n_negs = 0
                for _ in range(negatives):
                    n = table[np.random.randint(0, n_table)]
                    if n == context:
                        continue
                    negs[n_negs] = n
                    n_negs += 1
                loss += _pair_update(W, C, center, context, negs, n_negs, lr, neu1e, coef)
                pairs += 1
    return loss, pairs


@numba.njit(parallel=True, cache=True)
def _train_docs_parallel(tokens, starts, bounds, offsets, W, C, table, keep_prob, window,
                         negatives, lr0, lr_floor, total_words):
    # lock-free shared updates across shards; results vary run to run
    n_shards = bounds.shape[0] - 1
    losses = np.zeros(n_shards)
    pairs = np.zeros(n_shards, dtype=np.int64)
    for k in numba.prange(n_shards):
        loss, p = _train_docs(tokens, starts, bounds[k], bounds[k + 1], W, C, table, keep_prob,
                              window, negatives, lr0, lr_floor, offsets[k], total_words)
        losses[k] = loss
        pairs[k] = p
    return losses.sum(), pairs.sum()


# ---------------------------------------------------------------------------
# table


@dataclass
class EmbeddingTable:
    """Input vectors (the ones compared by cosine) plus the output/context vectors."""

    keys: list[str]
    vectors: np.ndarray
    context: np.ndarray | None = None
    epoch_losses: list[float] = field(default_factory=list)
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {k: i for i, k in enumerate(self.keys)}
        if len(self.index) != len(self.keys):
            raise EmbeddingError("duplicate keys in embedding table")
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.keys):
            raise EmbeddingError("vectors must be a (len(keys), dim) array")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: str) -> bool:
        return key in self.index

    def vector(self, key: str) -> np.ndarray:
        try:
            return self.vectors[self.index[key]]
        except KeyError:
            raise EmbeddingError(f"missing vector for {key!r}") from None

    def similarity(self, a: str, b: str) -> float:
        return cosine(self.vector(a), self.vector(b))

    def save_text(self, path: str | Path) -> None:
        """``V n`` header, then ``key v1 ... vn`` per line at 9 significant digits."""
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{len(self.keys)} {self.dim}\n")
            for key, row in zip(self.keys, self.vectors):
                if not key or any(ch.isspace() for ch in key):
                    raise EmbeddingError(f"key {key!r} cannot be written in text format")
                fh.write(key + " " + " ".join(f"{v:.9g}" for v in row.tolist()) + "\n")

    @classmethod
    def load_text(cls, path: str | Path, dtype=np.float32) -> "EmbeddingTable":
        with Path(path).open(encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise EmbeddingError(f"{path}: expected 'V n' header")
            n_keys, dim = int(header[0]), int(header[1])
            keys = []
            vectors = np.zeros((n_keys, dim), dtype=dtype)
            for i, line in enumerate(fh):
                parts = line.rstrip("\n").split(" ")
                if i >= n_keys or len(parts) != dim + 1:
                    raise EmbeddingError(f"{path}:{i + 2}: malformed embedding row")
                keys.append(parts[0])
                vectors[i] = [float(x) for x in parts[1:]]
        if len(keys) != n_keys:
            raise EmbeddingError(f"{path}: header promises {n_keys} rows, found {len(keys)}")
        return cls(keys, vectors)


def cosine(S, T) -> float:
    S = np.asarray(S, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if S.shape != T.shape or S.ndim != 1:
        raise EmbeddingError(f"cosine needs equal-length vectors, got {S.shape} and {T.shape}")
    ns = math.sqrt(float(np.dot(S, S)))
    nt = math.sqrt(float(np.dot(T, T)))
    if ns == 0.0 or nt == 0.0:
        raise EmbeddingError("undefined cosine: zero vector")
    return float(min(1.0, max(-1.0, float(np.dot(S, T)) / (ns * nt))))


def sgns_step(center: str, context: str, negatives: Sequence[str], lr: float, table: EmbeddingTable) -> float:
    """Apply one negative-sampling update in place and return the pre-update loss."""
    if table.context is None:
        raise EmbeddingError("table has no context vectors to train")
    ids = [table.index[k] if k in table.index else None for k in (center, context, *negatives)]
    if any(i is None for i in ids):
        missing = [k for k, i in zip((center, context, *negatives), ids) if i is None]
        raise EmbeddingError(f"keys not in vocabulary: {missing}")
    negs = np.asarray(ids[2:], dtype=np.int64)
    neu1e = np.zeros(table.dim, dtype=table.vectors.dtype)
    coef = np.zeros(len(negs) + 1, dtype=np.float64)
    return float(_pair_update(table.vectors, table.context, ids[0], ids[1], negs, len(negs), lr, neu1e, coef))


def init_table(vocab: Vocabulary, dim: int, seed: int, dtype=np.float32) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    W = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(vocab), dim)).astype(dtype)
    C = np.zeros((len(vocab), dim), dtype=dtype)
    return EmbeddingTable(list(vocab.keys), W, C)


def _encode(sequences: Sequence[Sequence[str]], vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    starts = [0]
    chunks = []
    for seq in sequences:
        ids = [vocab.index[k] for k in seq if k in vocab.index]
        if len(ids) < 2:
            continue
        chunks.append(ids)
        starts.append(starts[-1] + len(ids))
    tokens = np.fromiter((i for ids in chunks for i in ids), dtype=np.int64, count=starts[-1])
    return tokens, np.asarray(starts, dtype=np.int64)


def _keep_probabilities(vocab: Vocabulary, subsample: float) -> np.ndarray:
    if subsample <= 0:
        return np.ones(len(vocab))
    f = vocab.freqs / vocab.freqs.sum()
    ratio = subsample / f
    return np.minimum(1.0, np.sqrt(ratio) + ratio)


def train(sequences: Iterable[Sequence[str]], params: TrainParams | None = None) -> EmbeddingTable:
    params = params or TrainParams()
    params.validate()
    sequences = [list(s) for s in sequences]
    vocab = build_vocab(sequences, params.min_count)
    tokens, starts = _encode(sequences, vocab)
    table = init_table(vocab, params.dim, params.seed)
    neg_table = build_neg_table(vocab, params.neg_table_power, max(params.neg_table_size, 10 * len(vocab)))
    keep_prob = _keep_probabilities(vocab, params.subsample)
    n_docs = len(starts) - 1
    per_epoch = int(starts[-1])
    total_words = float(max(1, per_epoch * params.epochs))
    logger.info("training on %d docs, %d tokens, vocabulary %d", n_docs, per_epoch, len(vocab))

    _seed(params.seed)
    W, C = table.vectors, table.context
    for epoch in range(params.epochs):
        done = epoch * per_epoch
        if params.workers == 1:
            loss, pairs = _train_docs(
                tokens, starts, 0, n_docs, W, C, neg_table, keep_prob, params.window,
                params.negatives, params.initial_lr, params.min_lr_fraction, done, total_words,
            )
        else:
            bounds = np.linspace(0, n_docs, params.workers + 1).astype(np.int64)
            offsets = done + starts[bounds[:-1]]
            loss, pairs = _train_docs_parallel(
                tokens, starts, bounds, offsets, W, C, neg_table, keep_prob, params.window,
                params.negatives, params.initial_lr, params.min_lr_fraction, total_words,
            )
        avg = float(loss) / pairs if pairs else 0.0
        table.epoch_losses.append(avg)
        logger.info("epoch %d: %d pairs, mean loss %.5f", epoch + 1, pairs, avg)
    if not np.all(np.isfinite(W)):
        raise EmbeddingError("training diverged: non-finite vectors")
    return table
