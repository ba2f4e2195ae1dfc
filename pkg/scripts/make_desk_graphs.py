#!/usr/bin/env python3
"""Generate the bundled benchmark networks under src/walkbench/data/.

The five shipped edge lists are deterministic synthetic stand-ins matched
to the node/edge counts of the small public networks they are named after
(the build environment has no access to the upstream repository).  Street
networks are grown geometrically (Euclidean MST plus shortest chords),
the interactome as a hub-skewed attachment tree with extra hub edges, and
the social networks as community-structured graphs with skewed degrees.

Run from the repository root:  python scripts/make_desk_graphs.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "walkbench" / "data"


def _canon(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def geometric_streets(n: int, m: int, seed: int) -> set[tuple[int, int]]:
    """Euclidean MST over random points, then the shortest remaining chords."""
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    edges: set[tuple[int, int]] = set()
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    best_from = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best = d2[0].copy()
    best_from[:] = 0
    for _ in range(n - 1):
        best_masked = np.where(in_tree, np.inf, best)
        v = int(np.argmin(best_masked))
        edges.add(_canon(int(best_from[v]), v))
        in_tree[v] = True
        closer = d2[v] < best
        best[closer] = d2[v][closer]
        best_from[closer] = v
    iu, iv = np.triu_indices(n, k=1)
    order = np.argsort(d2[iu, iv], kind="stable")
    for idx in order:
        if len(edges) >= m:
            break
        e = _canon(int(iu[idx]), int(iv[idx]))
        if e not in edges:
            edges.add(e)
    return edges


def hub_tree(n: int, m: int, seed: int) -> set[tuple[int, int]]:
    """Preferential-attachment tree plus hub-biased extra edges."""
    rng = np.random.default_rng(seed)
    deg = np.zeros(n, dtype=np.float64)
    edges: set[tuple[int, int]] = set()
    deg[0] = deg[1] = 1
    edges.add((0, 1))
    for v in range(2, n):
        w = deg[:v] + 0.25
        u = int(rng.choice(v, p=w / w.sum()))
        edges.add(_canon(u, v))
        deg[u] += 1
        deg[v] += 1
    while len(edges) < m:
        w = deg + 0.25
        u, v = rng.choice(n, size=2, replace=False, p=w / w.sum())
        e = _canon(int(u), int(v))
        if e not in edges:
            edges.add(e)
            deg[list(e)] += 1
    return edges


def community_social(
    n: int, m: int, blocks: int, p_out: float, seed: int
) -> set[tuple[int, int]]:
    """Community-partitioned graph: spanning structure, then skewed infill."""
    rng = np.random.default_rng(seed)
    block_of = np.sort(np.arange(n) % blocks)
    deg = np.zeros(n, dtype=np.float64)
    edges: set[tuple[int, int]] = set()

    # intra-block attachment trees
    for b in range(blocks):
        members = np.flatnonzero(block_of == b)
        for i in range(1, len(members)):
            w = deg[members[:i]] + 0.5
            u = int(members[rng.choice(i, p=w / w.sum())])
            v = int(members[i])
            edges.add(_canon(u, v))
            deg[u] += 1
            deg[v] += 1
    # one bridge between consecutive blocks keeps the graph connected
    for b in range(blocks - 1):
        u = int(rng.choice(np.flatnonzero(block_of == b)))
        v = int(rng.choice(np.flatnonzero(block_of == b + 1)))
        e = _canon(u, v)
        if e not in edges:
            edges.add(e)
            deg[u] += 1
            deg[v] += 1
    while len(edges) < m:
        w = deg + 0.5
        u = int(rng.choice(n, p=w / w.sum()))
        if rng.random() < p_out:
            pool = np.flatnonzero(block_of != block_of[u])
        else:
            pool = np.flatnonzero(block_of == block_of[u])
        v = int(rng.choice(pool))
        e = _canon(u, v)
        if e[0] != e[1] and e not in edges:
            edges.add(e)
            deg[u] += 1
            deg[v] += 1
    return edges


def check(name: str, edges: set[tuple[int, int]], n: int, m: int) -> None:
    assert len(edges) == m, (name, len(edges), m)
    nodes = {u for e in edges for u in e}
    assert nodes == set(range(n)), (name, "node set mismatch")
    adj: dict[int, list[int]] = {u: [] for u in range(n)}
    for u, v in edges:
        assert u != v
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    assert len(seen) == n, (name, "not connected", len(seen))


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    specs = {
        "student_cooperation": (124, 183, lambda: community_social(124, 183, 4, 0.08, seed=11)),
        "interactome_pdz": (126, 145, lambda: hub_tree(126, 145, seed=22)),
        "urban_streets_brasilia": (135, 147, lambda: geometric_streets(135, 147, seed=33)),
        "urban_streets_san_francisco": (152, 201, lambda: geometric_streets(152, 201, seed=44)),
        "sp_high_school_facebook": (156, 1078, lambda: community_social(156, 1078, 4, 0.05, seed=55)),
    }
    for name, (n, m, gen) in specs.items():
        edges = gen()
        check(name, edges, n, m)
        path = OUT_DIR / f"{name}.edges"
        with open(path, "w") as fh:
            for u, v in sorted(edges):
                fh.write(f"{u} {v}\n")
        degs = np.zeros(n)
        for u, v in edges:
            degs[u] += 1
            degs[v] += 1
        print(
            f"{name}: n={n} m={m} deg(min/med/max)="
            f"{degs.min():.0f}/{np.median(degs):.0f}/{degs.max():.0f}"
        )


if __name__ == "__main__":
    main()
