"""Command-line interface.

``walkbench run`` drives the whole experiment from a config file and/or
flags; the stage subcommands (prepare, walk, embed, score, report) operate
on persisted artifacts and compose in shell pipelines.  Exit codes: 0 on
success, 1 when any stage failed, 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import datasets, pipeline
from .pipeline import ConfigError, ExperimentConfig
from .sgns import TrainConfig
from .walks import parse_walk

log = logging.getLogger("walkbench")

_CONFIG_KEYS = {
    "graphs", "walks", "split_fraction", "master_seed", "output_dir",
    "threads", "training_mode", "beta", "alpha", "dim", "window",
    "negatives", "epochs", "lr_start", "lr_end", "noise_power",
}


def read_config_file(path) -> dict[str, str]:
    """Parse the plain ``key = value`` experiment config format."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for i, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{i}: expected 'key = value'")
            key, value = stripped.split("=", 1)
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{i}: unknown config key {key!r}")
            out[key] = value.strip()
    return out


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_experiment(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict[str, str] = {}
    if args.config:
        raw = read_config_file(args.config)

    def pick(key: str, default):
        flag = getattr(args, key, None)
        if flag is not None:
            return flag
        if key in raw:
            return raw[key]
        return default

    graphs = pick("graphs", "")
    if isinstance(graphs, str):
        graphs = _split_list(graphs)
    walk_text = pick("walks", "")
    if isinstance(walk_text, str):
        walk_names = _split_list(walk_text)
    else:
        walk_names = walk_text
    beta = int(pick("beta", 40))
    alpha = int(pick("alpha", 200))
    try:
        if walk_names:
            walks = [parse_walk(w, beta=beta, alpha=alpha) for w in walk_names]
        else:
            from .walks import default_walks

            walks = default_walks(beta=beta, alpha=alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    train = TrainConfig(
        dim=int(pick("dim", 128)),
        window=int(pick("window", 10)),
        negatives=int(pick("negatives", 5)),
        epochs=int(pick("epochs", 5)),
        lr_start=float(pick("lr_start", 0.025)),
        lr_end=float(pick("lr_end", 0.0001)),
        noise_power=float(pick("noise_power", 0.75)),
        workers=max(1, int(pick("threads", 1))),
    )
    try:
        return ExperimentConfig(
            graphs=graphs,
            walks=walks,
            split_fraction=float(pick("split_fraction", 0.25)),
            train=train,
            master_seed=int(pick("master_seed", 0)),
            output_dir=Path(pick("output_dir", "walkbench-run")),
            threads=int(pick("threads", 1)),
            training_mode=str(pick("training_mode", "deterministic")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _cmd_run(args) -> int:
    cfg = build_experiment(args)
    report, n_failures = pipeline.run_pipeline(cfg)
    done = sum(len(g["walks"]) for g in report["graphs"].values())
    print(f"{done} (graph, walk) results -> {cfg.output_dir / pipeline.REPORT_NAME}")
    if n_failures:
        print(f"{n_failures} stage failures; see report", file=sys.stderr)
        return 1
    return 0


def _cmd_prepare(args) -> int:
    source = pipeline.resolve_graph(args.input)
    pipeline.stage_prepare(source, Path(args.outdir), args.fraction, args.seed)
    return 0


def _cmd_walk(args) -> int:
    cfg = parse_walk(args.walk, beta=args.beta, alpha=args.alpha, seed=args.seed)
    pipeline.stage_walk(Path(args.graph), cfg, Path(args.out))
    return 0


def _cmd_embed(args) -> int:
    cfg = TrainConfig(
        dim=args.dim, window=args.window, negatives=args.negatives,
        epochs=args.epochs, lr_start=args.lr_start, lr_end=args.lr_end,
        noise_power=args.noise_power, seed=args.seed, workers=args.workers,
    )
    pipeline.stage_embed(Path(args.corpus), cfg, Path(args.out))
    return 0


def _cmd_score(args) -> int:
    pipeline.stage_score(Path(args.embedding), Path(args.labels),
                         Path(args.out), args.walk_name, args.graph_name)
    return 0


def _cmd_report(args) -> int:
    report = pipeline.stage_report(Path(args.run_dir))
    order = report["medians"]["walks_by_auc"]
    print("walk ranking by median AUC:")
    for w in order:
        print(f"  {w:16s} auc={report['medians']['auc'][w]:.3f} "
              f"auc_pr={report['medians']['auc_pr'][w]:.3f}")
    return 0


def _cmd_fetch(args) -> int:
    manifest = (datasets.load_manifest(args.manifest) if args.manifest
                else datasets.default_manifest())
    by_name = {d.name: d for d in manifest}
    if args.name not in by_name:
        raise ConfigError(f"{args.name!r} not in manifest")
    cache = Path(args.cache) if args.cache else datasets.cache_dir_from_env()
    path = datasets.fetch_remote(by_name[args.name], cache)
    print(path)
    return 0


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr-start", type=float, default=0.025)
    p.add_argument("--lr-end", type=float, default=0.0001)
    p.add_argument("--noise-power", type=float, default=0.75)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="walkbench",
        description="Benchmark biased random-walk corpora as skip-gram "
                    "embedding inputs for link prediction.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log stage progress and timing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full experiment")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--graphs", help="comma-separated names or paths")
    p.add_argument("--walks", help="comma-separated walk names, e.g. "
                                   "'RW,TSAW,N2V(1.5,0.5)'")
    p.add_argument("--split-fraction", dest="split_fraction", type=float)
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--threads", type=int)
    p.add_argument("--training-mode", dest="training_mode",
                   choices=("deterministic", "async"))
    p.add_argument("--beta", type=int)
    p.add_argument("--alpha", type=int)
    for flag in ("--dim", "--window", "--negatives", "--epochs"):
        p.add_argument(flag, dest=flag.lstrip("-"), type=int)
    p.add_argument("--lr-start", dest="lr_start", type=float)
    p.add_argument("--lr-end", dest="lr_end", type=float)
    p.add_argument("--noise-power", dest="noise_power", type=float)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("prepare", help="split one graph into residual + labels")
    p.add_argument("--input", required=True, help="edge-list path or dataset name")
    p.add_argument("--outdir", required=True)
    p.add_argument("--fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("walk", help="generate a walk corpus")
    p.add_argument("--graph", required=True, help="residual.edges from prepare")
    p.add_argument("--walk", required=True, help="walk name, e.g. 'N2V(1,1)'")
    p.add_argument("--out", required=True)
    p.add_argument("--beta", type=int, default=40)
    p.add_argument("--alpha", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_walk)

    p = sub.add_parser("embed", help="train embeddings over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("score", help="score labeled edges with an embedding")
    p.add_argument("--embedding", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--walk-name", dest="walk_name", required=True)
    p.add_argument("--graph-name", dest="graph_name", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("report", help="aggregate score files into the report")
    p.add_argument("--run-dir", dest="run_dir", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("fetch", help="download a manifest dataset into the cache")
    p.add_argument("--name", required=True)
    p.add_argument("--manifest")
    p.add_argument("--cache")
    p.set_defaults(func=_cmd_fetch)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
