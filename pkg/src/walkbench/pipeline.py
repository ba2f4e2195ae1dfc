"""End-to-end experiment driver.

For each graph: one labeled split shared by every walk strategy (the
cross-walk score correlations require edge-aligned vectors), then per walk
a corpus, an embedding, and a score vector; finally metrics, correlation
matrices, across-graph medians, and plot-ready CSVs.

Every stage reads and writes the serialized artifact formats, so the
`prepare`, `walk`, `embed`, `score` and `report` subcommands compose in a
shell exactly like one `run` invocation.  All randomness derives from the
master seed through `seed_for`, making deterministic-mode runs byte-stable.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import datasets
from .evaluation import (
    ScoreVector,
    aggregate_medians,
    auc_pr,
    auc_roc,
    correlation_matrix,
    score_edges,
)
from .graph import (
    LabeledEdgeSet,
    build_graph,
    largest_component,
    largest_component_nodes,
    load_indexed_graph,
    read_edge_file,
    save_indexed_graph,
    save_node_map,
    split_labeled,
)
from .sgns import EmbeddingMatrix, TrainConfig, load_embedding, save_embedding, train_sgns
from .walks import WalkConfig, WalkCorpus, default_walks, generate_corpus

log = logging.getLogger(__name__)

REPORT_NAME = "report.json"


class ConfigError(Exception):
    """Invalid experiment configuration; nothing was computed."""


class StageError(Exception):
    """A pipeline stage failed or was fed an incompatible artifact."""


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs."""

    graphs: list[str]
    walks: list[WalkConfig] = field(default_factory=default_walks)
    split_fraction: float = 0.25
    train: TrainConfig = field(default_factory=TrainConfig)
    master_seed: int = 0
    output_dir: Path = Path("walkbench-run")
    threads: int = 1
    training_mode: str = "deterministic"

    def __post_init__(self):
        if not self.graphs:
            raise ConfigError("no graphs configured")
        if not self.walks:
            raise ConfigError("walk list is empty")
        if not (0.0 < self.split_fraction < 1.0):
            raise ConfigError(f"split_fraction must be in (0,1): {self.split_fraction}")
        if self.training_mode not in ("deterministic", "async"):
            raise ConfigError(f"unknown training_mode {self.training_mode!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        names = [w.display_name for w in self.walks]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate walk strategies: {names}")


def seed_for(master_seed: int, *parts) -> int:
    """Stable 64-bit sub-seed for a named piece of work."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode())
    return int.from_bytes(h.digest()[:8], "little")


def graph_slug(spec: str) -> str:
    """Directory-safe name for a graph given by dataset name or file path."""
    return Path(spec).stem.replace(" ", "_").lower()


def resolve_graph(spec: str, cache_dir: Path | str | None = None) -> Path:
    """Locate a graph: an existing file path, a bundled name, or a manifest fetch."""
    p = Path(spec)
    if p.exists():
        return p
    if spec in datasets.bundled_names():
        return datasets.bundled_graph_path(spec)
    by_name = {d.name: d for d in datasets.default_manifest()}
    if spec in by_name:
        cache = Path(cache_dir) if cache_dir else datasets.cache_dir_from_env()
        return datasets.fetch_remote(by_name[spec], cache)
    raise ConfigError(f"cannot resolve graph {spec!r}: not a file, bundled "
                      f"network, or manifest entry")


# ---------------------------------------------------------------------------
# stages


def stage_prepare(source: Path, graph_dir: Path, fraction: float, seed: int) -> dict:
    """Canonicalize a raw edge list and produce the labeled split artifacts."""
    graph_dir = Path(graph_dir)
    graph_dir.mkdir(parents=True, exist_ok=True)
    raw = read_edge_file(source)
    g_all = build_graph(raw)
    keep = largest_component_nodes(g_all)
    g = largest_component(g_all)
    report = datasets.validate_selection(g, fraction)
    for w in report.warnings:
        log.warning("%s: %s", source, w)
    remap = np.full(g_all.n, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    node_map = {
        label: int(remap[idx]) for label, idx in raw.label_map.items() if remap[idx] >= 0
    }
    residual, labels = split_labeled(g, fraction, seed)
    save_indexed_graph(graph_dir / "residual.edges", residual)
    save_node_map(graph_dir / "nodemap.tsv", node_map)
    labels.save_csv(graph_dir / "labels.csv")
    log.info(
        "prepared %s: n=%d, %d residual edges, %d positives",
        source, g.n, residual.edge_count, labels.n_pos,
    )
    return {
        "residual": graph_dir / "residual.edges",
        "nodemap": graph_dir / "nodemap.tsv",
        "labels": graph_dir / "labels.csv",
    }


def stage_walk(residual_path: Path, cfg: WalkConfig, out_path: Path) -> Path:
    """Generate and persist the walk corpus for one strategy."""
    g = load_indexed_graph(residual_path)
    t0 = time.perf_counter()
    corpus = generate_corpus(g, cfg)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    corpus.save(out_path, cfg)
    log.info("walked %s on %s: %d sequences, %d tokens (%.1fs)",
             cfg.display_name, residual_path, len(corpus), corpus.token_count,
             time.perf_counter() - t0)
    return out_path


def stage_embed(corpus_path: Path, cfg: TrainConfig, out_path: Path) -> Path:
    """Train embeddings over a persisted corpus."""
    corpus, walk_cfg = WalkCorpus.load(corpus_path)
    t0 = time.perf_counter()
    emb = train_sgns(corpus, cfg)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_embedding(out_path, emb)
    log.info("embedded %s (%s): %s matrix (%.1fs)", corpus_path,
             walk_cfg.display_name, emb.input.shape, time.perf_counter() - t0)
    return out_path


def stage_score(
    embedding_path: Path, labels_path: Path, out_path: Path,
    walk_name: str, graph_name: str,
) -> Path:
    """Score the labeled edges with one embedding; raw cosine per pair."""
    mat = load_embedding(embedding_path)
    labels = LabeledEdgeSet.load_csv(labels_path)
    sv = score_edges(EmbeddingMatrix(input=mat, output=np.zeros_like(mat)),
                     labels, walk_id=walk_name)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        fh.write(
            f"# walkbench-scores v1 walk={walk_name} graph={graph_name} "
            f"zero_vector_pairs={sv.n_zero_vector}\n"
        )
        w = csv.writer(fh)
        w.writerow(["u", "v", "label", "score"])
        for i in range(len(labels.label)):
            w.writerow([
                int(labels.u[i]), int(labels.v[i]), int(labels.label[i]),
                f"{sv.scores[i]:.17g}",
            ])
    return out_path


def _read_scores(path: Path) -> tuple[str, str, np.ndarray, np.ndarray]:
    """Returns (graph, walk, labels, scores) from a score CSV."""
    with open(path, newline="") as fh:
        header = fh.readline().split()
        if header[:3] != ["#", "walkbench-scores", "v1"]:
            raise StageError(f"{path}: not a v1 score file from the score stage")
        meta = dict(f.split("=", 1) for f in header[3:])
        r = csv.reader(fh)
        cols = next(r, None)
        if cols != ["u", "v", "label", "score"]:
            raise StageError(f"{path}: unexpected score columns {cols}")
        labels = []
        scores = []
        for row in r:
            labels.append(int(row[2]))
            scores.append(float(row[3]))
    return meta["graph"], meta["walk"], np.array(labels), np.array(scores)


def _json_safe(value):
    if isinstance(value, float):
        return None if not np.isfinite(value) else value
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _write_corr_csv(path: Path, names: list[str], mat: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["walk"] + names)
        for i, name in enumerate(names):
            row = [name] + [
                "" if not np.isfinite(mat[i, j]) else f"{mat[i, j]:.17g}"
                for j in range(len(names))
            ]
            w.writerow(row)


def stage_report(run_dir: Path, failures: list[dict] | None = None) -> dict:
    """Aggregate all score files under run_dir into the final report.

    Writes report.json, one corr_<graph>.csv per graph, and the plotdata/
    CSVs.  Errors out (writing nothing) if no score files exist.
    """
    run_dir = Path(run_dir)
    score_files = sorted(run_dir.glob("graphs/*/scores/*.csv"))
    if not score_files:
        raise StageError(f"no score files under {run_dir}/graphs/*/scores")

    per_graph: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]] = {}
    for path in score_files:
        graph, walk, labels, scores = _read_scores(path)
        per_graph.setdefault(graph, {})[walk] = (labels, scores)

    metrics: dict[str, dict[str, tuple[float, float]]] = {}
    correlations: dict[str, tuple[list[str], np.ndarray]] = {}
    graphs_obj: dict[str, dict] = {}
    for graph in sorted(per_graph):
        walks = per_graph[graph]
        metrics[graph] = {}
        walk_scores: dict[str, ScoreVector] = {}
        for walk in sorted(walks):
            labels, scores = walks[walk]
            auc = auc_roc(labels, scores)
            ap = auc_pr(labels, scores)
            metrics[graph][walk] = (auc, ap)
            walk_scores[walk] = ScoreVector(scores=scores, walk_id=walk)
        names, mat = correlation_matrix(walk_scores)
        correlations[graph] = (names, mat)
        graphs_obj[graph] = {
            "walks": {
                w: {"auc": metrics[graph][w][0], "auc_pr": metrics[graph][w][1]}
                for w in sorted(walks)
            },
            "corr_walks": names,
            "corr": mat.tolist(),
        }

    summary = aggregate_medians(metrics, correlations)
    report = {
        "format": "walkbench-report v1",
        "graphs": graphs_obj,
        "medians": {
            "walks_by_auc": summary.walk_names,
            "auc": summary.median_auc,
            "auc_pr": summary.median_auc_pr,
            "corr_walks": summary.corr_names,
            "corr": summary.median_corr.tolist(),
        },
        "failures": sorted(
            failures or [], key=lambda f: (f["graph"], f["walk"], f["stage"])
        ),
    }
    report = _json_safe(report)

    with open(run_dir / REPORT_NAME, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for graph, (names, mat) in correlations.items():
        _write_corr_csv(run_dir / f"corr_{graph}.csv", names, mat)

    plot_dir = run_dir / "plotdata"
    plot_dir.mkdir(exist_ok=True)
    _write_corr_csv(plot_dir / "median_correlation_heatmap.csv",
                    summary.corr_names, summary.median_corr)
    with open(plot_dir / "summary_medians.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["walk", "median_auc", "median_auc_pr"])
        for walk in summary.walk_names:
            w.writerow([walk, f"{summary.median_auc[walk]:.17g}",
                        f"{summary.median_auc_pr[walk]:.17g}"])
    for graph, (names, mat) in correlations.items():
        off = [
            (mat[i, j], names[i], names[j])
            for i in range(len(names))
            for j in range(i + 1, len(names))
            if np.isfinite(mat[i, j])
        ]
        if not off:
            continue
        lo = min(off, key=lambda t: (t[0], t[1], t[2]))
        hi = max(off, key=lambda t: (t[0], t[1], t[2]))
        for tag, (r, wx, wy) in (("lowest", lo), ("highest", hi)):
            labels, sx = per_graph[graph][wx]
            _, sy = per_graph[graph][wy]
            with open(plot_dir / f"scatter_{graph}_{tag}_pair.csv", "w",
                      newline="") as fh:
                fh.write(f"# graph={graph} walk_x={wx} walk_y={wy} r={r:.17g}\n")
                w = csv.writer(fh)
                w.writerow(["score_x", "score_y", "label"])
                for i in range(len(labels)):
                    w.writerow([f"{sx[i]:.17g}", f"{sy[i]:.17g}", int(labels[i])])
    return report


# ---------------------------------------------------------------------------
# full pipeline


def _config_manifest(cfg: ExperimentConfig, slugs: list[str]) -> dict:
    walks = [
        {"name": w.display_name, "kind": w.kind, "lam": w.lam, "p": w.p,
         "q": w.q, "beta": w.beta, "alpha": w.alpha}
        for w in cfg.walks
    ]
    seeds = {}
    for slug in slugs:
        seeds[slug] = {
            "split": seed_for(cfg.master_seed, "split", slug),
            "walk": {
                w.display_name: seed_for(cfg.master_seed, "walk", slug, w.slug)
                for w in cfg.walks
            },
            "train": {
                w.display_name: seed_for(cfg.master_seed, "train", slug, w.slug)
                for w in cfg.walks
            },
        }
    return {
        "format": "walkbench-manifest v1",
        "config": {
            "graphs": list(cfg.graphs),
            "walks": walks,
            "split_fraction": cfg.split_fraction,
            "train": {
                "dim": cfg.train.dim, "window": cfg.train.window,
                "negatives": cfg.train.negatives, "epochs": cfg.train.epochs,
                "lr_start": cfg.train.lr_start, "lr_end": cfg.train.lr_end,
                "noise_power": cfg.train.noise_power,
            },
            "master_seed": cfg.master_seed,
            "threads": cfg.threads,
            "training_mode": cfg.training_mode,
        },
        "seeds": seeds,
    }


def run_pipeline(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Run the full experiment; returns (report, failure count)."""
    sources = {}
    for spec in cfg.graphs:
        sources[spec] = resolve_graph(spec)
    slugs = [graph_slug(s) for s in cfg.graphs]
    if len(set(slugs)) != len(slugs):
        raise ConfigError(f"graph names collide after slugging: {slugs}")

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "manifest.json", "w") as fh:
        json.dump(_config_manifest(cfg, slugs), fh, indent=2, sort_keys=True)
        fh.write("\n")

    workers = cfg.train.workers if cfg.training_mode == "async" else 1
    train_base = replace(cfg.train, workers=workers)

    failures: list[dict] = []
    jobs = []
    for spec, slug in zip(cfg.graphs, slugs):
        gdir = out / "graphs" / slug
        try:
            paths = stage_prepare(sources[spec], gdir, cfg.split_fraction,
                                  seed_for(cfg.master_seed, "split", slug))
        except Exception as exc:
            log.error("prepare failed for %s: %s", spec, exc)
            for w in cfg.walks:
                failures.append({"graph": slug, "walk": w.display_name,
                                 "stage": "prepare", "error": str(exc)})
            continue
        for w in cfg.walks:
            jobs.append((slug, gdir, paths, w))

    def run_walk_job(job) -> dict | None:
        slug, gdir, paths, w = job
        stage = "walk"
        try:
            wcfg = replace(w, seed=seed_for(cfg.master_seed, "walk", slug, w.slug))
            corpus_path = stage_walk(paths["residual"], wcfg,
                                     gdir / "walks" / f"{w.slug}.walks")
            stage = "embed"
            tcfg = replace(train_base,
                           seed=seed_for(cfg.master_seed, "train", slug, w.slug))
            emb_path = stage_embed(corpus_path, tcfg, gdir / "emb" / f"{w.slug}.emb")
            stage = "score"
            stage_score(emb_path, paths["labels"],
                        gdir / "scores" / f"{w.slug}.csv", w.display_name, slug)
            return None
        except Exception as exc:
            log.error("%s failed for %s/%s: %s", stage, slug, w.display_name, exc)
            return {"graph": slug, "walk": w.display_name, "stage": stage,
                    "error": str(exc)}

    if cfg.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            for result in pool.map(run_walk_job, jobs):
                if result:
                    failures.append(result)
    else:
        for job in jobs:
            result = run_walk_job(job)
            if result:
                failures.append(result)

    report = stage_report(out, failures)
    return report, len(failures)
