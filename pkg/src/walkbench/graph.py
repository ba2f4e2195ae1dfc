"""Graph parsing, canonicalization, and labeled edge preparation.

Graphs are undirected, simple, and stored in compressed adjacency form
(offsets + concatenated sorted neighbor lists).  Preparation for link
prediction removes a fraction of the edges as positive examples, keeps
the residual graph for walking, and samples an equal number of non-edges
as negatives.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np


class GraphError(Exception):
    """Raised for structurally invalid graph inputs or operations."""


class ParseError(GraphError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class SplitError(GraphError):
    """Raised when a labeled split cannot be produced as requested."""


@dataclass(frozen=True)
class RawEdges:
    """Edge pairs as parsed, plus the label -> dense index mapping.

    ``label_map`` assigns indices in first-appearance order, so parsing is
    deterministic for a fixed input.
    """

    pairs: list[tuple[str, str]]
    label_map: dict[str, int]

    @property
    def n(self) -> int:
        return len(self.label_map)


class Graph:
    """Immutable undirected simple graph in compressed adjacency form.

    ``offsets`` has length n+1; the neighbors of u are
    ``neighbors[offsets[u]:offsets[u+1]]``, sorted ascending.  Neighbor
    lists never contain the node itself or duplicates.
    """

    __slots__ = ("offsets", "neighbors", "_degrees")

    def __init__(self, offsets: np.ndarray, neighbors: np.ndarray):
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.neighbors = np.ascontiguousarray(neighbors, dtype=np.int32)
        self._degrees = np.diff(self.offsets).astype(np.int64)

    @property
    def n(self) -> int:
        return len(self.offsets) - 1

    @property
    def edge_count(self) -> int:
        return len(self.neighbors) // 2

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    def degree(self, u: int) -> int:
        return int(self.offsets[u + 1] - self.offsets[u])

    def neighbors_of(self, u: int) -> np.ndarray:
        return self.neighbors[self.offsets[u] : self.offsets[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors_of(u)
        i = np.searchsorted(nbrs, v)
        return i < len(nbrs) and nbrs[i] == v

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each undirected edge once, as (u, v) with u < v."""
        for u in range(self.n):
            for v in self.neighbors_of(u):
                if u < v:
                    yield u, int(v)

    def edge_array(self) -> np.ndarray:
        """All undirected edges as an (m, 2) array with u < v, sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self._degrees)
        dst = self.neighbors.astype(np.int64)
        keep = src < dst
        return np.column_stack([src[keep], dst[keep]])

    def check(self) -> None:
        """Validate structural invariants; raises GraphError on violation."""
        n = self.n
        if self.offsets[0] != 0 or self.offsets[-1] != len(self.neighbors):
            raise GraphError("offsets do not span the neighbor array")
        if np.any(np.diff(self.offsets) < 0):
            raise GraphError("offsets not monotone")
        if len(self.neighbors) and (
            self.neighbors.min() < 0 or self.neighbors.max() >= n
        ):
            raise GraphError("neighbor index out of range")
        for u in range(n):
            nbrs = self.neighbors_of(u)
            if np.any(np.diff(nbrs) <= 0):
                raise GraphError(f"neighbor list of {u} not strictly sorted")
            if np.any(nbrs == u):
                raise GraphError(f"self-loop at {u}")
            for v in nbrs:
                if not self.has_edge(int(v), u):
                    raise GraphError(f"asymmetric edge ({u}, {v})")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.offsets, other.offsets) and np.array_equal(
            self.neighbors, other.neighbors
        )

    def __hash__(self):  # pragma: no cover - explicit: mutable-ish container
        raise TypeError("Graph is not hashable")

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_count})"


@dataclass
class LabeledEdgeSet:
    """Held-out positive edges and sampled non-edges with binary labels.

    Arrays are aligned: row i is the pair (u[i], v[i]) with label[i] in
    {1, 0}.  Pairs are canonical (u < v) and unique.
    """

    u: np.ndarray
    v: np.ndarray
    label: np.ndarray

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.label == 1))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.label == 0))

    def __len__(self) -> int:
        return len(self.label)

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for i in range(len(self.label)):
            yield int(self.u[i]), int(self.v[i]), int(self.label[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledEdgeSet):
            return NotImplemented
        return (
            np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.label, other.label)
        )

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v", "label"])
            for u, v, lab in self.edges():
                w.writerow([u, v, lab])

    @classmethod
    def load_csv(cls, path) -> "LabeledEdgeSet":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header != ["u", "v", "label"]:
                raise ParseError(f"bad labeled-edge CSV header in {path}: {header}")
            rows = [(int(a), int(b), int(c)) for a, b, c in r]
        if not rows:
            raise ParseError(f"empty labeled-edge CSV: {path}")
        arr = np.array(rows, dtype=np.int64)
        return cls(u=arr[:, 0], v=arr[:, 1], label=arr[:, 2])


# ---------------------------------------------------------------------------
# parsing


def load_edge_list(source: str | TextIO | Iterable[str]) -> RawEdges:
    """Parse a whitespace-separated edge list into RawEdges.

    One edge per line, two tokens per line; lines starting with '#' are
    comments.  Blank lines are ignored.  Node labels are arbitrary strings
    and are assigned dense indices in first-appearance order.
    """
    if isinstance(source, str):
        lines: Iterable[str] = source.splitlines()
    else:
        lines = source
    pairs: list[tuple[str, str]] = []
    label_map: dict[str, int] = {}
    line_no = 0
    for line in lines:
        line_no += 1
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 2:
            raise ParseError(
                f"expected 2 tokens, got {len(tokens)}: {stripped!r}", line_no
            )
        a, b = tokens
        for lab in (a, b):
            if lab not in label_map:
                label_map[lab] = len(label_map)
        pairs.append((a, b))
    if not pairs:
        raise ParseError("no edges in input")
    return RawEdges(pairs=pairs, label_map=label_map)


def read_edge_file(path) -> RawEdges:
    with open(path) as fh:
        try:
            return load_edge_list(fh)
        except ParseError as exc:
            raise ParseError(f"{path}: {exc}", exc.line_no) from None


def save_edge_list(path, g: Graph) -> None:
    with open(path, "w") as fh:
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def save_indexed_graph(path, g: Graph) -> None:
    """Persist a graph whose node identity matters (isolated nodes included).

    The header records the node count; the body is a plain edge list, so the
    file is still parseable by `load_edge_list`.
    """
    with open(path, "w") as fh:
        fh.write(f"# walkbench-graph v1 nodes={g.n}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def load_indexed_graph(path) -> Graph:
    """Read a graph written by save_indexed_graph, preserving node indices."""
    with open(path) as fh:
        header = fh.readline().split()
        if header[:3] != ["#", "walkbench-graph", "v1"]:
            raise ParseError(f"{path}: not a v1 graph file from the prepare stage")
        n = int(dict(f.split("=", 1) for f in header[3:])["nodes"])
        pairs = []
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            a, b = stripped.split()
            pairs.append((int(a), int(b)))
    if not pairs:
        return Graph(
            offsets=np.zeros(n + 1, dtype=np.int64), neighbors=np.empty(0, np.int32)
        )
    return _csr_from_pairs(np.array(pairs, dtype=np.int64), n)


def save_node_map(path, label_map: dict[str, int]) -> None:
    """Sidecar mapping original labels to dense indices, one per line."""
    with open(path, "w") as fh:
        for label, idx in sorted(label_map.items(), key=lambda kv: kv[1]):
            fh.write(f"{label}\t{idx}\n")


def load_node_map(path) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            label, idx = line.rstrip("\n").split("\t")
            out[label] = int(idx)
    return out


# ---------------------------------------------------------------------------
# construction


def _csr_from_pairs(pairs: np.ndarray, n: int) -> Graph:
    """Build the CSR graph from integer pairs; dedupes and drops self-loops."""
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if len(pairs) == 0:
        raise GraphError("no edges survive canonicalization")
    both = np.concatenate([pairs, pairs[:, ::-1]])
    # lexicographic unique over (u, v) keys: sorts neighbor lists as a side effect
    keys = both[:, 0].astype(np.int64) * n + both[:, 1].astype(np.int64)
    keys = np.unique(keys)
    src = keys // n
    dst = keys % n
    counts = np.bincount(src, minlength=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return Graph(offsets=offsets, neighbors=dst.astype(np.int32))


def build_graph(raw: RawEdges) -> Graph:
    """Canonicalize RawEdges into an undirected simple Graph.

    Duplicate edges (in either orientation) collapse to one; self-loops are
    dropped.  Errors if nothing survives.
    """
    if not raw.pairs:
        raise GraphError("empty edge set")
    idx = np.array(
        [(raw.label_map[a], raw.label_map[b]) for a, b in raw.pairs], dtype=np.int64
    )
    return _csr_from_pairs(idx, raw.n)


def largest_component_nodes(g: Graph) -> np.ndarray:
    """Original node indices of the largest connected component, ascending.

    Ties between equal-sized components go to the one containing the
    smallest original node index.
    """
    n = g.n
    comp = np.full(n, -1, dtype=np.int64)
    n_comp = 0
    for root in range(n):
        if comp[root] >= 0:
            continue
        comp[root] = n_comp
        stack = [root]
        while stack:
            u = stack.pop()
            for v in g.neighbors_of(u):
                if comp[v] < 0:
                    comp[v] = n_comp
                    stack.append(int(v))
        n_comp += 1
    sizes = np.bincount(comp, minlength=n_comp)
    # components are discovered in order of their smallest member, so the
    # first argmax applies the smallest-index tie-break
    best = int(np.argmax(sizes))
    return np.flatnonzero(comp == best)


def largest_component(g: Graph) -> Graph:
    """Induced subgraph on the largest connected component, reindexed densely."""
    keep = largest_component_nodes(g)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep), dtype=np.int64)
    pairs = g.edge_array()
    mask = (remap[pairs[:, 0]] >= 0) & (remap[pairs[:, 1]] >= 0)
    pairs = remap[pairs[mask]]
    if len(pairs) == 0:
        # single-node component: a graph with one isolated node
        return Graph(offsets=np.zeros(2, dtype=np.int64), neighbors=np.empty(0, np.int32))
    return _csr_from_pairs(pairs, len(keep))


# ---------------------------------------------------------------------------
# labeled split


def _sample_negatives(g: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Sample `count` distinct non-edges of g uniformly, as (count, 2) u < v."""
    n = g.n
    total_pairs = n * (n - 1) // 2
    available = total_pairs - g.edge_count
    if available < count:
        raise SplitError(
            f"graph too dense: {available} non-edges available, {count} requested"
        )
    chosen: set[tuple[int, int]] = set()
    attempts = 0
    cap = 100 * count
    while len(chosen) < count and attempts < cap:
        attempts += 1
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        if u == v:
            continue
        if u > v:
            u, v = v, u
        if (u, v) in chosen or g.has_edge(u, v):
            continue
        chosen.add((u, v))
    if len(chosen) < count:
        # dense graph: enumerate the complement exactly and draw the remainder
        remaining = count - len(chosen)
        pool_keys = []
        for u in range(n):
            cand = np.arange(u + 1, n, dtype=np.int64)
            if len(cand) == 0:
                continue
            mask = np.ones(len(cand), dtype=bool)
            nbrs = g.neighbors_of(u)
            upper = nbrs[nbrs > u].astype(np.int64)
            mask[upper - (u + 1)] = False
            pool_keys.append(u * n + cand[mask])
        keys = np.concatenate(pool_keys)
        if chosen:
            taken = np.array([a * n + b for a, b in chosen], dtype=np.int64)
            keys = keys[~np.isin(keys, taken)]
        pick = rng.choice(len(keys), size=remaining, replace=False)
        for key in keys[pick]:
            chosen.add((int(key) // n, int(key) % n))
    out = np.array(sorted(chosen), dtype=np.int64)
    return out


def split_labeled(
    g: Graph, fraction: float, seed: int
) -> tuple[Graph, LabeledEdgeSet]:
    """Remove floor(fraction*|E|) random edges; pair them with sampled non-edges.

    Returns the residual graph (all nodes kept, so removal may disconnect it
    or isolate nodes) and the labeled edge set: the removed edges labeled 1
    and an equal number of non-edges of the *original* graph labeled 0.
    Deterministic for a fixed seed.
    """
    if not (0.0 < fraction < 1.0):
        raise SplitError(f"fraction must be in (0, 1), got {fraction}")
    m = g.edge_count
    n_pos = int(np.floor(fraction * m))
    if n_pos < 1:
        raise SplitError(f"floor({fraction} * {m}) < 1 edge to remove")
    rng = np.random.default_rng(seed)
    edges = g.edge_array()
    removed_idx = rng.choice(m, size=n_pos, replace=False)
    keep_mask = np.ones(m, dtype=bool)
    keep_mask[removed_idx] = False
    positives = edges[~keep_mask]
    positives = positives[np.lexsort((positives[:, 1], positives[:, 0]))]
    kept = edges[keep_mask]

    negatives = _sample_negatives(g, n_pos, rng)

    if len(kept) == 0:
        residual = Graph(
            offsets=np.zeros(g.n + 1, dtype=np.int64), neighbors=np.empty(0, np.int32)
        )
    else:
        residual = _csr_from_pairs(kept, g.n)

    u = np.concatenate([positives[:, 0], negatives[:, 0]])
    v = np.concatenate([positives[:, 1], negatives[:, 1]])
    label = np.concatenate(
        [np.ones(n_pos, dtype=np.int64), np.zeros(n_pos, dtype=np.int64)]
    )
    return residual, LabeledEdgeSet(u=u, v=v, label=label)
