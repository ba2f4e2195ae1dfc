"""Skip-gram embeddings trained with negative sampling over walk corpora.

The trainer is a from-scratch SGD loop over (center, context) pairs drawn
with per-position shrunken windows; each pair is discriminated against k
noise tokens drawn from the unigram^power distribution.  Two modes exist:
the default single-worker mode is bitwise deterministic for a fixed seed;
with workers > 1 the same schedule is sharded across lock-free threads
(updates may tear, results are only statistically reproducible).

Matrices are float32 during training; all inner routines are dtype-generic
so the same update code can be exercised in float64 by the gradient tests.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from threading import Thread
from typing import Iterator

import numpy as np
from numba import njit

from .rng import SplitMix64, nb_next_below, nb_next_double, nb_stream_key
from .walks import WalkCorpus

# stream tags: input init, epoch shuffle, window radii, noise draws
_TAG_INIT = 1000
_TAG_SHUFFLE = 1001
_TAG_WINDOW = 1002
_TAG_NOISE = 1003


class TrainError(Exception):
    """Raised when training cannot proceed (bad corpus, non-finite loss)."""


class EmbeddingFormatError(Exception):
    """Embedding file unreadable or written by an incompatible embed stage."""


@dataclass(frozen=True)
class TrainConfig:
    """Skip-gram hyperparameters.

    ``window`` is the context radius; the effective radius per position is
    drawn uniformly from 1..window, which down-weights distant contexts.
    The learning rate decays linearly from lr_start to lr_end over the
    total number of processed pairs.
    """

    dim: int = 128
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    lr_start: float = 0.025
    lr_end: float = 0.0001
    noise_power: float = 0.75
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ValueError("dim, window, negatives must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (self.lr_start >= self.lr_end > 0):
            raise ValueError("need lr_start >= lr_end > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class Vocab:
    """Token counts per node plus the cumulative noise distribution."""

    freq: np.ndarray
    noise_cum: np.ndarray

    @property
    def size(self) -> int:
        return len(self.freq)


@dataclass
class EmbeddingMatrix:
    """Input and output vector tables; rows are node indexes.

    Node similarity downstream uses ``input`` only.  ``epoch_losses`` holds
    the mean per-pair loss of each epoch when the trainer collected it.
    """

    input: np.ndarray
    output: np.ndarray
    epoch_losses: np.ndarray | None = None


def build_vocab(corpus: WalkCorpus, noise_power: float = 0.75) -> Vocab:
    """Exact token counts and a normalized cumulative freq^power table."""
    if corpus.token_count == 0:
        raise TrainError("empty corpus")
    freq = np.bincount(corpus.tokens, minlength=corpus.n_nodes).astype(np.int64)
    w = freq.astype(np.float64) ** noise_power
    noise_cum = np.cumsum(w / w.sum())
    noise_cum[-1] = 1.0
    return Vocab(freq=freq, noise_cum=noise_cum)


def positive_pairs(
    sequence, window: int, rng: SplitMix64
) -> Iterator[tuple[int, int]]:
    """Yield (center, context) pairs with a shrunken radius per position.

    For each position a radius r is drawn uniformly from 1..window and all
    in-bounds neighbors within r positions are paired with the center.
    Draw consumption matches the trainer exactly: one draw per position.
    """
    seq = np.asarray(sequence)
    n = len(seq)
    for t in range(n):
        r = 1 + rng.next_below(window)
        for j in range(max(0, t - r), min(n - 1, t + r) + 1):
            if j != t:
                yield int(seq[t]), int(seq[j])


def noise_sample(vocab: Vocab, exclude: int, k: int, rng: SplitMix64) -> np.ndarray:
    """k draws from the noise distribution; draws equal to `exclude` redraw."""
    if vocab.size < 2:
        raise TrainError("vocabulary must contain at least 2 tokens")
    out = np.empty(k, dtype=np.int64)
    got = 0
    tries = 0
    while got < k:
        tries += 1
        if tries > 1000 * (k + 1):
            raise TrainError("noise distribution has no mass outside `exclude`")
        cand = int(np.searchsorted(vocab.noise_cum, rng.next_double(), side="right"))
        if cand >= vocab.size:
            cand = vocab.size - 1
        if cand == exclude:
            continue
        out[got] = cand
        got += 1
    return out


# ---------------------------------------------------------------------------
# compiled core


@njit(cache=True, nogil=True, inline="always")
def _log_sigmoid(x):
    if x < -33.0:
        return x
    return -math.log1p(math.exp(-x))


@njit(cache=True, nogil=True)
def _pair_update(syn0, syn1, center, targets, n_targets, lr, work, coef):
    """One SGD step for (center, targets[0]=context, targets[1:]=negatives).

    Gradients are evaluated against the pre-update rows (so repeated targets
    accumulate), then applied.  Returns the pair loss, or NaN if a score is
    non-finite.  Arithmetic follows the dtype of the matrices.
    """
    d = syn0.shape[1]
    zero = syn0.dtype.type(0.0)
    loss = 0.0
    for i in range(d):
        work[i] = zero
    for t in range(n_targets):
        row = targets[t]
        s = zero
        for i in range(d):
            s += syn1[row, i] * syn0[center, i]
        sf = np.float64(s)
        if not np.isfinite(sf):
            return np.nan
        sig = 1.0 / (1.0 + math.exp(-sf))
        if t == 0:
            loss -= _log_sigmoid(sf)
            coef[t] = syn0.dtype.type((1.0 - sig) * lr)
        else:
            loss -= _log_sigmoid(-sf)
            coef[t] = syn0.dtype.type((0.0 - sig) * lr)
        for i in range(d):
            work[i] += coef[t] * syn1[row, i]
    for t in range(n_targets):
        row = targets[t]
        c = coef[t]
        for i in range(d):
            syn1[row, i] += c * syn0[center, i]
    for i in range(d):
        syn0[center, i] += work[i]
    return loss


@njit(cache=True, nogil=True)
def _init_input(syn0, seed, scale):
    state = nb_stream_key(seed, _TAG_INIT, 0)
    rows, cols = syn0.shape
    for r in range(rows):
        for c in range(cols):
            state, u = nb_next_double(state)
            syn0[r, c] = (u - 0.5) * scale


@njit(cache=True, nogil=True)
def _sgns_pass(tokens, seq_offsets, order, syn0, syn1, noise_cum, window,
               k, epochs, lr_start, lr_end, seed, total_pairs, do_train,
               thread_id, n_threads, epoch_losses, epoch_pairs):
    """Replay the full epoch schedule over the corpus.

    With do_train=False only the window radii stream is consumed and the
    number of pairs the schedule would produce is returned.  With
    do_train=True, updates run with the lr decaying linearly over
    total_pairs.  Sharding (n_threads > 1) trains every n_threads-th
    sequence of the shuffled order; the shuffle itself is identical across
    threads.  Returns pairs processed, or -1 on a non-finite loss.
    """
    n_seq = len(order)
    shuffle_state = nb_stream_key(seed, _TAG_SHUFFLE, 0)
    window_state = nb_stream_key(seed, _TAG_WINDOW, thread_id)
    noise_state = nb_stream_key(seed, _TAG_NOISE, thread_id)
    d = syn0.shape[1]
    work = np.empty(d, syn0.dtype)
    coef = np.empty(k + 1, syn0.dtype)
    targets = np.empty(k + 1, np.int64)
    vocab_size = len(noise_cum)
    pair_idx = 0
    denom = total_pairs - 1
    if denom < 1:
        denom = 1
    lr_span = lr_end - lr_start
    for e in range(epochs):
        for i in range(n_seq - 1, 0, -1):
            shuffle_state, j = nb_next_below(shuffle_state, i + 1)
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp
        for oi in range(thread_id, n_seq, n_threads):
            si = order[oi]
            lo = seq_offsets[si]
            length = seq_offsets[si + 1] - lo
            for t in range(length):
                window_state, rr = nb_next_below(window_state, window)
                r = rr + 1
                left = t - r
                if left < 0:
                    left = 0
                right = t + r
                if right > length - 1:
                    right = length - 1
                if not do_train:
                    pair_idx += right - left
                    continue
                center = tokens[lo + t]
                for tj in range(left, right + 1):
                    if tj == t:
                        continue
                    context = tokens[lo + tj]
                    targets[0] = context
                    nt = 1
                    while nt < k + 1:
                        noise_state, u = nb_next_double(noise_state)
                        cand = np.searchsorted(noise_cum, u, side="right")
                        if cand >= vocab_size:
                            cand = vocab_size - 1
                        if cand == context:
                            continue
                        targets[nt] = cand
                        nt += 1
                    progress = np.float64(pair_idx * n_threads)
                    if progress > denom:
                        progress = np.float64(denom)
                    lr = lr_start + lr_span * (progress / denom)
                    loss = _pair_update(syn0, syn1, center, targets, k + 1,
                                        lr, work, coef)
                    if not np.isfinite(loss):
                        return -1
                    epoch_losses[e] += loss
                    epoch_pairs[e] += 1
                    pair_idx += 1
    return pair_idx


def _count_pairs(corpus: WalkCorpus, cfg: TrainConfig) -> int:
    dummy0 = np.empty((1, 1), dtype=np.float32)
    dummy1 = np.empty((1, 1), dtype=np.float32)
    dummy_cum = np.ones(1, dtype=np.float64)
    losses = np.zeros(cfg.epochs, dtype=np.float64)
    pairs = np.zeros(cfg.epochs, dtype=np.int64)
    order = np.arange(len(corpus), dtype=np.int64)
    return int(
        _sgns_pass(corpus.tokens, corpus.offsets, order, dummy0, dummy1,
                   dummy_cum, cfg.window, cfg.negatives, cfg.epochs,
                   cfg.lr_start, cfg.lr_end, cfg.seed, 0, False, 0, 1,
                   losses, pairs)
    )


def sgns_pair_update(
    emb: EmbeddingMatrix, center: int, context: int, negatives, lr: float
) -> float:
    """Apply one pair update in place and return the pair loss."""
    syn0, syn1 = emb.input, emb.output
    rows = syn0.shape[0]
    negatives = np.asarray(negatives, dtype=np.int64)
    for idx in (center, context, *negatives):
        if not (0 <= idx < rows):
            raise IndexError(f"token index {idx} out of range")
    if lr < 0:
        raise ValueError("lr must be >= 0")
    targets = np.empty(len(negatives) + 1, dtype=np.int64)
    targets[0] = context
    targets[1:] = negatives
    work = np.empty(syn0.shape[1], dtype=syn0.dtype)
    coef = np.empty(len(targets), dtype=syn0.dtype)
    loss = _pair_update(syn0, syn1, center, targets, len(targets), lr, work, coef)
    if not np.isfinite(loss):
        raise TrainError("non-finite intermediate in pair update")
    return float(loss)


def train_sgns(corpus: WalkCorpus, cfg: TrainConfig) -> EmbeddingMatrix:
    """Train embeddings over the corpus; returns the trained matrices.

    The input matrix is initialized uniformly in (-0.5/dim, 0.5/dim), the
    output matrix at zero.  Requires the corpus to cover every node.
    """
    vocab = build_vocab(corpus, cfg.noise_power)
    if np.any(vocab.freq == 0):
        missing = int(np.flatnonzero(vocab.freq == 0)[0])
        raise TrainError(
            f"corpus does not cover all {corpus.n_nodes} nodes "
            f"(node {missing} absent): vocabulary/graph mismatch"
        )
    if vocab.size < 2:
        raise TrainError("need at least 2 nodes to train")
    syn0 = np.empty((vocab.size, cfg.dim), dtype=np.float32)
    _init_input(syn0, cfg.seed, 1.0 / cfg.dim)
    syn1 = np.zeros((vocab.size, cfg.dim), dtype=np.float32)

    total = _count_pairs(corpus, cfg)
    n_threads = cfg.workers
    losses = np.zeros((n_threads, cfg.epochs), dtype=np.float64)
    pairs = np.zeros((n_threads, cfg.epochs), dtype=np.int64)
    if n_threads == 1:
        order = np.arange(len(corpus), dtype=np.int64)
        status = _sgns_pass(corpus.tokens, corpus.offsets, order, syn0, syn1,
                            vocab.noise_cum, cfg.window, cfg.negatives,
                            cfg.epochs, cfg.lr_start, cfg.lr_end, cfg.seed,
                            total, True, 0, 1, losses[0], pairs[0])
        if status < 0:
            raise TrainError("non-finite loss during training")
    else:
        statuses = np.zeros(n_threads, dtype=np.int64)

        def shard(tid: int) -> None:
            order = np.arange(len(corpus), dtype=np.int64)
            statuses[tid] = _sgns_pass(
                corpus.tokens, corpus.offsets, order, syn0, syn1,
                vocab.noise_cum, cfg.window, cfg.negatives, cfg.epochs,
                cfg.lr_start, cfg.lr_end, cfg.seed, total, True, tid,
                n_threads, losses[tid], pairs[tid])

        threads = [Thread(target=shard, args=(tid,)) for tid in range(n_threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if np.any(statuses < 0):
            raise TrainError("non-finite loss during training")

    if not np.isfinite(syn0).all() or not np.isfinite(syn1).all():
        raise TrainError("non-finite embedding entries after training")
    per_epoch = losses.sum(axis=0) / np.maximum(pairs.sum(axis=0), 1)
    return EmbeddingMatrix(input=syn0, output=syn1, epoch_losses=per_epoch)


# ---------------------------------------------------------------------------
# serialization

_BINARY_MAGIC = b"WBEMB001"


def save_embedding(path, emb: EmbeddingMatrix, binary: bool = False) -> None:
    """Persist the input (node) matrix; text by default, binary on request."""
    mat = np.ascontiguousarray(emb.input, dtype=np.float32)
    if binary:
        with open(path, "wb") as fh:
            fh.write(_BINARY_MAGIC)
            fh.write(struct.pack("<qq", mat.shape[0], mat.shape[1]))
            fh.write(mat.astype("<f4").tobytes())
        return
    with open(path, "w") as fh:
        fh.write(f"{mat.shape[0]} {mat.shape[1]}\n")
        for i in range(mat.shape[0]):
            row = " ".join(f"{float(x):.9g}" for x in mat[i])
            fh.write(f"{i} {row}\n")


def load_embedding(path) -> np.ndarray:
    """Read a node matrix written by save_embedding (text or binary)."""
    with open(path, "rb") as fh:
        head = fh.read(len(_BINARY_MAGIC))
        if head == _BINARY_MAGIC:
            rows, cols = struct.unpack("<qq", fh.read(16))
            data = np.frombuffer(fh.read(rows * cols * 4), dtype="<f4")
            if data.size != rows * cols:
                raise EmbeddingFormatError(f"{path}: truncated binary embedding")
            return data.reshape(rows, cols).copy()
    try:
        with open(path) as fh:
            header = fh.readline().split()
            rows, cols = int(header[0]), int(header[1])
            mat = np.zeros((rows, cols), dtype=np.float32)
            seen = 0
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                idx = int(parts[0])
                if len(parts) != cols + 1 or not (0 <= idx < rows):
                    raise EmbeddingFormatError(
                        f"{path}: malformed embedding row for node {parts[0]}"
                    )
                mat[idx] = [np.float32(x) for x in parts[1:]]
                seen += 1
        if seen != rows:
            raise EmbeddingFormatError(f"{path}: expected {rows} rows, found {seen}")
    except (ValueError, IndexError) as exc:
        raise EmbeddingFormatError(
            f"{path}: not an embedding file produced by the embed stage ({exc})"
        ) from None
    return mat
