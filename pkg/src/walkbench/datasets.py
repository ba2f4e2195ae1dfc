"""Benchmark network acquisition, caching, and selection checks.

A manifest lists named networks with their source URLs and optional sha256
digests.  Fetches cache to ``cache/<name>.edges`` (override the location
with the WALKBENCH_CACHE environment variable); a small set of benchmark
networks ships with the package so everything runs offline.
"""

from __future__ import annotations

import hashlib
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from filelock import FileLock

from .graph import Graph

CACHE_ENV = "WALKBENCH_CACHE"


class FetchError(Exception):
    """Base class for acquisition failures."""


class TransportError(FetchError):
    """Network-level failure; retrying may succeed."""


class ChecksumError(FetchError):
    """Digest mismatch; the offending file was quarantined.  Not retryable."""


@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    source_url: str
    expected_checksum: str | None = None
    local_path: Path | None = None


def load_manifest(path) -> list[DatasetDescriptor]:
    """Parse a manifest: one ``name<TAB>url<TAB>checksum`` record per line.

    An empty or ``-`` checksum field means no digest is pinned.
    """
    out = []
    seen = set()
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FetchError(f"malformed manifest record: {line!r}")
            name, url, digest = parts
            if name in seen:
                raise FetchError(f"duplicate dataset name in manifest: {name}")
            seen.add(name)
            out.append(
                DatasetDescriptor(
                    name=name,
                    source_url=url,
                    expected_checksum=digest if digest not in ("", "-") else None,
                )
            )
    return out


def default_manifest() -> list[DatasetDescriptor]:
    """The manifest bundled with the package."""
    with resources.as_file(
        resources.files("walkbench.data").joinpath("manifest.tsv")
    ) as p:
        return load_manifest(p)


def bundled_names() -> list[str]:
    """Names of the edge lists vendored into the package."""
    root = resources.files("walkbench.data")
    return sorted(
        p.name[: -len(".edges")] for p in root.iterdir() if p.name.endswith(".edges")
    )


def bundled_graph_path(name: str) -> Path:
    """Filesystem path of a vendored edge list."""
    ref = resources.files("walkbench.data").joinpath(f"{name}.edges")
    if not ref.is_file():
        raise FetchError(f"no bundled network named {name!r}")
    with resources.as_file(ref) as p:
        return Path(p)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def cache_dir_from_env(default: Path | str = "cache") -> Path:
    return Path(os.environ.get(CACHE_ENV, default))


def fetch_remote(desc: DatasetDescriptor, cache_dir) -> Path:
    """Return the local path of the dataset, downloading on a cold cache.

    Warm-cache hits perform no network operations.  A checksum mismatch
    moves the file aside (``.quarantine``) and raises ChecksumError; any
    transport problem raises TransportError naming the dataset.
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    target = cache_dir / f"{desc.name}.edges"
    lock = FileLock(str(target) + ".lock")
    with lock:
        if target.exists():
            _verify(desc, target)
            return target
        if not desc.source_url:
            raise TransportError(f"{desc.name}: no source URL and cache is cold")
        tmp = target.with_suffix(".part")
        try:
            with urllib.request.urlopen(desc.source_url, timeout=60) as resp:
                data = resp.read()
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"{desc.name}: fetch failed: {exc}") from exc
        tmp.write_bytes(data)
        try:
            _verify(desc, tmp)
        except ChecksumError:
            raise
        tmp.replace(target)
        return target


def _verify(desc: DatasetDescriptor, path: Path) -> None:
    if desc.expected_checksum is None:
        return
    actual = _sha256(path)
    if actual != desc.expected_checksum.lower():
        quarantine = path.with_suffix(path.suffix + ".quarantine")
        path.replace(quarantine)
        raise ChecksumError(
            f"{desc.name}: checksum mismatch ({actual} != "
            f"{desc.expected_checksum}); file moved to {quarantine}"
        )


@dataclass
class SelectionReport:
    """Outcome of the benchmark-selection predicate for one graph."""

    ok: bool
    failures: list[str]
    warnings: list[str]


def validate_selection(g: Graph, fraction: float = 0.25) -> SelectionReport:
    """Check a graph against the benchmark selection predicate.

    Node counts outside 150..5000 only warn (small desk graphs are fine);
    too few edges to hold out at least one positive is a failure.
    """
    failures: list[str] = []
    warnings: list[str] = []
    if not (150 <= g.n <= 5000):
        warnings.append(f"node count {g.n} outside the 150..5000 selection range")
    if int(fraction * g.edge_count) < 1:
        failures.append(
            f"insufficient edges to predict: floor({fraction} * {g.edge_count}) < 1"
        )
    try:
        g.check()
    except Exception as exc:
        failures.append(f"not a simple undirected graph: {exc}")
    return SelectionReport(ok=not failures, failures=failures, warnings=warnings)
