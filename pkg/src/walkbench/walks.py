"""Biased random-walk corpus generation.

Five transition kernels are supported: the uniform walk (rw), the
degree-proportional walk (dg), the inverse-degree walk (id), the true
self-avoiding walk (tsaw, exponential decay in per-walk visit counts), and
the second-order return/in-out walk (n2v, parameters p and q).

Each walk owns a private RNG stream keyed by (seed, start node, replica),
so corpus generation is reproducible regardless of execution order.  One
uniform draw is consumed per step by every kernel; kernels that agree on
the unnormalized weight vector therefore produce identical sequences from
identical streams (in particular n2v with p = q = 1 reproduces rw exactly).

Hot loops are JIT-compiled; the module-level kernel functions are the
plain-numpy reference surface used for analysis and tests.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numba import njit

from .graph import Graph
from .rng import SplitMix64, nb_next_double, nb_stream_key

LN2 = math.log(2.0)

KIND_RW = 0
KIND_DG = 1
KIND_ID = 2
KIND_TSAW = 3
KIND_N2V = 4

_KIND_IDS = {"rw": KIND_RW, "dg": KIND_DG, "id": KIND_ID, "tsaw": KIND_TSAW, "n2v": KIND_N2V}


class DeadEndError(Exception):
    """Transition weights requested at a degree-0 node."""


class CorpusFormatError(Exception):
    """Corpus file unreadable or written by an incompatible walk stage."""


@dataclass(frozen=True)
class WalkConfig:
    """One walk strategy plus its budget.

    ``lam`` applies to tsaw only; ``p``/``q`` to n2v only.  ``beta`` walks
    are started from every node, each at most ``alpha`` nodes long.
    """

    kind: str
    lam: float = LN2
    p: float = 1.0
    q: float = 1.0
    beta: int = 40
    alpha: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_IDS:
            raise ValueError(f"unknown walk kind {self.kind!r}")
        if self.beta < 1 or self.alpha < 1:
            raise ValueError("beta and alpha must be >= 1")
        if self.lam <= 0 or self.p <= 0 or self.q <= 0:
            raise ValueError("lam, p, q must be positive")

    @property
    def display_name(self) -> str:
        if self.kind == "n2v":
            return f"N2V({self.p:g},{self.q:g})"
        if self.kind == "tsaw" and self.lam != LN2:
            return f"TSAW({self.lam:g})"
        return self.kind.upper()

    @property
    def slug(self) -> str:
        if self.kind == "n2v":
            return f"n2v_p{self.p:g}_q{self.q:g}"
        if self.kind == "tsaw" and self.lam != LN2:
            return f"tsaw_lam{self.lam:g}"
        return self.kind

    def header_params(self) -> str:
        if self.kind == "tsaw":
            return f"kind=tsaw lambda={self.lam!r}"
        if self.kind == "n2v":
            return f"kind=n2v p={self.p!r} q={self.q!r}"
        return f"kind={self.kind}"


_WALK_RE = re.compile(
    r"^\s*(rw|dg|id|tsaw|n2v)\s*(?:\(\s*([^)]*)\s*\))?\s*$", re.IGNORECASE
)


def parse_walk(text: str, beta: int = 40, alpha: int = 200, seed: int = 0) -> WalkConfig:
    """Parse a walk name like ``RW``, ``TSAW``, ``TSAW(0.5)`` or ``N2V(1.5,0.5)``."""
    m = _WALK_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse walk name {text!r}")
    kind = m.group(1).lower()
    args = [a.strip() for a in m.group(2).split(",")] if m.group(2) else []
    kwargs = dict(beta=beta, alpha=alpha, seed=seed)
    if kind == "tsaw" and len(args) == 1:
        kwargs["lam"] = float(args[0])
    elif kind == "n2v":
        if len(args) != 2:
            raise ValueError(f"n2v needs (p,q), got {text!r}")
        kwargs["p"] = float(args[0])
        kwargs["q"] = float(args[1])
    elif args:
        raise ValueError(f"walk kind {kind!r} takes no parameters: {text!r}")
    return WalkConfig(kind=kind, **kwargs)


def default_walks(beta: int = 40, alpha: int = 200, seed: int = 0) -> list[WalkConfig]:
    """The nine benchmark strategies: four structural kernels, five n2v setups."""
    mk = lambda kind, **kw: WalkConfig(kind=kind, beta=beta, alpha=alpha, seed=seed, **kw)
    return [
        mk("rw"),
        mk("dg"),
        mk("id"),
        mk("tsaw"),
        mk("n2v", p=1.0, q=1.0),
        mk("n2v", p=1.5, q=0.5),
        mk("n2v", p=0.5, q=1.5),
        mk("n2v", p=2.0, q=1.5),
        mk("n2v", p=0.25, q=0.5),
    ]


@dataclass
class WalkState:
    """Per-walk memory: the current node, and what each kernel needs.

    ``previous`` is None exactly at the first step (n2v); ``visit_counts``
    maps node -> number of appearances so far including the start (tsaw).
    """

    current: int
    previous: int | None = None
    visit_counts: dict[int, int] | None = None


# ---------------------------------------------------------------------------
# reference kernels (probability vectors over the sorted neighbor list)


def _check_deg(g: Graph, u: int) -> np.ndarray:
    nbrs = g.neighbors_of(u)
    if len(nbrs) == 0:
        raise DeadEndError(f"node {u} has no neighbors")
    return nbrs


def rw_weights(g: Graph, u: int) -> np.ndarray:
    """Uniform transition probabilities: 1/deg(u) per neighbor."""
    nbrs = _check_deg(g, u)
    return np.full(len(nbrs), 1.0 / len(nbrs))


def dg_weights(g: Graph, u: int) -> np.ndarray:
    """Probabilities proportional to each neighbor's degree."""
    nbrs = _check_deg(g, u)
    w = g.degrees[nbrs].astype(np.float64)
    return w / w.sum()


def id_weights(g: Graph, u: int) -> np.ndarray:
    """Probabilities proportional to each neighbor's reciprocal degree."""
    nbrs = _check_deg(g, u)
    w = 1.0 / g.degrees[nbrs].astype(np.float64)
    return w / w.sum()


def tsaw_raw_weight(count: int, lam: float) -> float:
    """Unnormalized self-avoiding weight after `count` visits: exp(-lam)**count.

    Computed as a power of the per-visit decay factor so one extra visit
    multiplies the weight by exactly exp(-lam); at lam = ln 2 the factor is
    exactly 0.5 and the weight after k visits is exactly 2**-k.
    """
    return math.exp(-lam) ** count


def tsaw_weights(g: Graph, state: WalkState, lam: float) -> np.ndarray:
    """Self-avoiding probabilities from the walk's visit counts."""
    nbrs = _check_deg(g, state.current)
    counts = state.visit_counts or {}
    base = math.exp(-lam)
    w = np.array([base ** counts.get(int(v), 0) for v in nbrs], dtype=np.float64)
    return w / w.sum()


def n2v_weights(g: Graph, state: WalkState, p: float, q: float) -> np.ndarray:
    """Second-order probabilities: 1/p back, 1 sideways, 1/q outward.

    Candidates equal to the previous node weigh 1/p; candidates adjacent to
    the previous node weigh 1; all others weigh 1/q.  With no previous node
    (first step) the distribution is uniform.
    """
    nbrs = _check_deg(g, state.current)
    if state.previous is None:
        return np.full(len(nbrs), 1.0 / len(nbrs))
    prev = state.previous
    w = np.empty(len(nbrs), dtype=np.float64)
    for i, x in enumerate(nbrs):
        x = int(x)
        if x == prev:
            w[i] = 1.0 / p
        elif g.has_edge(prev, x):
            w[i] = 1.0
        else:
            w[i] = 1.0 / q
    return w / w.sum()


def sample_step(weights: np.ndarray, rng: SplitMix64) -> int:
    """Draw a neighbor index from a probability vector by inversion."""
    return int(sample_steps(weights, rng, 1)[0])


def sample_steps(weights: np.ndarray, rng: SplitMix64, size: int) -> np.ndarray:
    """Vectorized `sample_step`: `size` independent draws from one vector."""
    weights = np.asarray(weights, dtype=np.float64)
    if not np.all(np.isfinite(weights)):
        raise ValueError("non-finite transition weight")
    cum = np.cumsum(weights)
    draws = rng_doubles(rng, size) * cum[-1]
    idx = np.searchsorted(cum, draws, side="right")
    return np.minimum(idx, len(cum) - 1)


def rng_doubles(rng: SplitMix64, size: int) -> np.ndarray:
    """Batch of uniform draws identical to `size` sequential next_double calls."""
    steps = np.arange(1, size + 1, dtype=np.uint64)
    z = np.uint64(rng.state) + np.uint64(0x9E3779B97F4A7C15) * steps
    rng.state = int(z[-1])
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)) * 1.1102230246251565e-16


# ---------------------------------------------------------------------------
# compiled engine


@njit(cache=True, nogil=True, inline="always")
def _fill_raw_weights(offsets, neighbors, degrees, kind, base, invp, invq,
                      u, prev, counts, wbuf):
    """Unnormalized transition weights of u's neighbors into wbuf[:deg]."""
    lo = offsets[u]
    deg = offsets[u + 1] - lo
    if kind == 0:
        for i in range(deg):
            wbuf[i] = 1.0
    elif kind == 1:
        for i in range(deg):
            wbuf[i] = np.float64(degrees[neighbors[lo + i]])
    elif kind == 2:
        for i in range(deg):
            wbuf[i] = 1.0 / np.float64(degrees[neighbors[lo + i]])
    elif kind == 3:
        for i in range(deg):
            wbuf[i] = base ** counts[neighbors[lo + i]]
    else:
        if prev < 0:
            for i in range(deg):
                wbuf[i] = 1.0
        else:
            plo = offsets[prev]
            phi = offsets[prev + 1]
            for i in range(deg):
                x = neighbors[lo + i]
                if x == prev:
                    wbuf[i] = invp
                else:
                    j = np.searchsorted(neighbors[plo:phi], x)
                    if j < phi - plo and neighbors[plo + j] == x:
                        wbuf[i] = 1.0
                    else:
                        wbuf[i] = invq
    return deg


@njit(cache=True, nogil=True, inline="always")
def _pick(wbuf, deg, u01):
    """Inversion sampling over wbuf[:deg]; wbuf is overwritten by its cumsum."""
    for i in range(1, deg):
        wbuf[i] += wbuf[i - 1]
    target = u01 * wbuf[deg - 1]
    j = np.searchsorted(wbuf[:deg], target, side="right")
    if j >= deg:
        j = deg - 1
    return j


@njit(cache=True, nogil=True)
def _walk_fill(offsets, neighbors, degrees, kind, base, invp, invq,
               alpha, start, state, out, counts, wbuf):
    """One walk into out[:length]; returns (length, final rng state).

    `counts` must be all-zero on entry and is restored to all-zero on exit.
    """
    out[0] = start
    length = 1
    if kind == 3:
        counts[start] = 1
    prev = -1
    u = start
    while length < alpha:
        if degrees[u] == 0:
            break
        deg = _fill_raw_weights(offsets, neighbors, degrees, kind, base,
                                invp, invq, u, prev, counts, wbuf)
        state, u01 = nb_next_double(state)
        j = _pick(wbuf, deg, u01)
        nxt = neighbors[offsets[u] + j]
        out[length] = nxt
        length += 1
        if kind == 3:
            counts[nxt] += 1
        prev = u
        u = nxt
    if kind == 3:
        for i in range(length):
            counts[out[i]] = 0
    return length, state


@njit(cache=True, nogil=True)
def _corpus_fill(offsets, neighbors, degrees, kind, base, invp, invq,
                 beta, alpha, seed, tokens, seq_offsets):
    """All beta * n walks in canonical (start, replica) order."""
    n = len(degrees)
    counts = np.zeros(n, dtype=np.int64)
    wbuf = np.empty(n, dtype=np.float64)
    walk = np.empty(alpha, dtype=np.int32)
    pos = 0
    si = 0
    for start in range(n):
        for rep in range(beta):
            state = nb_stream_key(seed, start, rep)
            length, _ = _walk_fill(offsets, neighbors, degrees, kind, base,
                                   invp, invq, alpha, start, state, walk,
                                   counts, wbuf)
            for i in range(length):
                tokens[pos + i] = walk[i]
            pos += length
            si += 1
            seq_offsets[si] = pos
    return pos


@njit(cache=True, nogil=True)
def _frozen_state_draws(offsets, neighbors, degrees, kind, base, invp, invq,
                        u, prev, counts, n_draws, state, hits):
    """Repeated next-step draws from one frozen state; hits[j] counts picks."""
    n = len(degrees)
    wbuf = np.empty(n, dtype=np.float64)
    deg = _fill_raw_weights(offsets, neighbors, degrees, kind, base, invp,
                            invq, u, prev, counts, wbuf)
    cum = np.empty(deg, dtype=np.float64)
    acc = 0.0
    for i in range(deg):
        acc += wbuf[i]
        cum[i] = acc
    for _ in range(n_draws):
        state, u01 = nb_next_double(state)
        target = u01 * cum[deg - 1]
        j = np.searchsorted(cum, target, side="right")
        if j >= deg:
            j = deg - 1
        hits[j] += 1
    return deg


def _kernel_args(cfg: WalkConfig) -> tuple[int, float, float, float]:
    return (
        _KIND_IDS[cfg.kind],
        math.exp(-cfg.lam),
        1.0 / cfg.p,
        1.0 / cfg.q,
    )


def _state_arrays(g: Graph, state: WalkState) -> tuple[int, np.ndarray]:
    prev = -1 if state.previous is None else int(state.previous)
    counts = np.zeros(g.n, dtype=np.int64)
    for node, c in (state.visit_counts or {}).items():
        counts[node] = c
    return prev, counts


def engine_raw_weights(g: Graph, cfg: WalkConfig, state: WalkState) -> np.ndarray:
    """Unnormalized weight vector the compiled engine uses for this state."""
    if g.degree(state.current) == 0:
        raise DeadEndError(f"node {state.current} has no neighbors")
    kind, base, invp, invq = _kernel_args(cfg)
    prev, counts = _state_arrays(g, state)
    wbuf = np.empty(g.n, dtype=np.float64)
    deg = _fill_raw_weights(g.offsets, g.neighbors, g.degrees, kind, base,
                            invp, invq, state.current, prev, counts, wbuf)
    return wbuf[:deg].copy()


def engine_step_frequencies(
    g: Graph, cfg: WalkConfig, state: WalkState, n_draws: int, seed: int
) -> np.ndarray:
    """Empirical next-step counts from n_draws engine transitions at a state."""
    if g.degree(state.current) == 0:
        raise DeadEndError(f"node {state.current} has no neighbors")
    kind, base, invp, invq = _kernel_args(cfg)
    prev, counts = _state_arrays(g, state)
    hits = np.zeros(g.degree(state.current), dtype=np.int64)
    _frozen_state_draws(g.offsets, g.neighbors, g.degrees, kind, base, invp,
                        invq, state.current, prev, counts, n_draws,
                        np.uint64(SplitMix64.for_stream(seed).state), hits)
    return hits


def generate_walk(
    g: Graph, start: int, cfg: WalkConfig, rng: SplitMix64 | None = None
) -> np.ndarray:
    """One walk from `start`; length alpha unless a dead end truncates it.

    The default stream is keyed by (cfg.seed, start, 0), matching replica 0
    of `generate_corpus`.
    """
    if not (0 <= start < g.n):
        raise ValueError(f"start {start} out of range")
    if rng is None:
        rng = SplitMix64.for_stream(cfg.seed, start, 0)
    kind, base, invp, invq = _kernel_args(cfg)
    out = np.empty(cfg.alpha, dtype=np.int32)
    counts = np.zeros(g.n, dtype=np.int64)
    wbuf = np.empty(g.n, dtype=np.float64)
    length, state = _walk_fill(g.offsets, g.neighbors, g.degrees, kind, base,
                               invp, invq, cfg.alpha, start,
                               np.uint64(rng.state), out, counts, wbuf)
    rng.state = int(state)
    return out[:length].copy()


class WalkCorpus:
    """A corpus of walks: concatenated token array plus sequence offsets."""

    __slots__ = ("tokens", "offsets", "n_nodes")

    def __init__(self, tokens: np.ndarray, offsets: np.ndarray, n_nodes: int):
        self.tokens = np.ascontiguousarray(tokens, dtype=np.int32)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.n_nodes = int(n_nodes)

    @classmethod
    def from_sequences(cls, sequences: Sequence[Sequence[int]], n_nodes: int) -> "WalkCorpus":
        offsets = np.zeros(len(sequences) + 1, dtype=np.int64)
        for i, s in enumerate(sequences):
            offsets[i + 1] = offsets[i] + len(s)
        tokens = np.empty(offsets[-1], dtype=np.int32)
        for i, s in enumerate(sequences):
            tokens[offsets[i] : offsets[i + 1]] = s
        return cls(tokens, offsets, n_nodes)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    @property
    def token_count(self) -> int:
        return len(self.tokens)

    def sequence(self, i: int) -> np.ndarray:
        return self.tokens[self.offsets[i] : self.offsets[i + 1]]

    def __iter__(self) -> Iterator[np.ndarray]:
        for i in range(len(self)):
            yield self.sequence(i)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WalkCorpus):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.tokens, other.tokens)
        )

    def save(self, path, cfg: WalkConfig) -> None:
        """One walk per line, space-separated node indexes, after a header."""
        with open(path, "w") as fh:
            fh.write(
                f"# walkbench-corpus v1 {cfg.header_params()} "
                f"beta={cfg.beta} alpha={cfg.alpha} seed={cfg.seed} "
                f"nodes={self.n_nodes}\n"
            )
            for seq in self:
                fh.write(" ".join(map(str, seq)))
                fh.write("\n")

    @classmethod
    def load(cls, path) -> tuple["WalkCorpus", WalkConfig]:
        with open(path) as fh:
            header = fh.readline().rstrip("\n")
            fields = header.split()
            if fields[:3] != ["#", "walkbench-corpus", "v1"]:
                raise CorpusFormatError(
                    f"{path}: not a v1 corpus produced by the walk stage"
                )
            meta = dict(f.split("=", 1) for f in fields[3:])
            sequences = [
                np.array(line.split(), dtype=np.int32) for line in fh if line.strip()
            ]
        kwargs = dict(
            kind=meta["kind"],
            beta=int(meta["beta"]),
            alpha=int(meta["alpha"]),
            seed=int(meta["seed"]),
        )
        if "lambda" in meta:
            kwargs["lam"] = float(meta["lambda"])
        if "p" in meta:
            kwargs["p"] = float(meta["p"])
            kwargs["q"] = float(meta["q"])
        cfg = WalkConfig(**kwargs)
        return cls.from_sequences(sequences, int(meta["nodes"])), cfg


def generate_corpus(g: Graph, cfg: WalkConfig) -> WalkCorpus:
    """beta walks from every node, in canonical (start, replica) order."""
    kind, base, invp, invq = _kernel_args(cfg)
    n_seq = g.n * cfg.beta
    tokens = np.empty(n_seq * cfg.alpha, dtype=np.int32)
    seq_offsets = np.zeros(n_seq + 1, dtype=np.int64)
    total = _corpus_fill(g.offsets, g.neighbors, g.degrees, kind, base, invp,
                         invq, cfg.beta, cfg.alpha, cfg.seed, tokens,
                         seq_offsets)
    return WalkCorpus(tokens[:total].copy(), seq_offsets, g.n)
