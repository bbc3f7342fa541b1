"""Python access to the flexsan simulator and orchestrator.

Every function takes an optional ``config`` (a dict, possibly partial, or a
path to a JSON file) plus ``overrides`` in ``dotted.path=value`` form, the same
as ``--set`` on the command line.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterable, Mapping, Sequence, Union

from . import _flexsan
from ._flexsan import (
    ConfigError,
    Error,
    InvalidArgument,
    SimulationError,
    ThroughputUnsatisfiable,
    TraceFormatError,
    achievable_rate,
    min_bandwidth,
)

ConfigLike = Union[None, Mapping[str, Any], str, "os.PathLike[str]"]

ALGORITHMS = ("tago", "static-gnb", "static-du", "greedy", "oracle")

__all__ = [
    "ALGORITHMS",
    "ConfigError",
    "Error",
    "InvalidArgument",
    "SimulationError",
    "ThroughputUnsatisfiable",
    "TraceFormatError",
    "achievable_rate",
    "check",
    "config_digest",
    "load_config",
    "min_bandwidth",
    "run",
    "solve",
    "sweep",
]


def _doc(config: ConfigLike) -> str:
    if config is None:
        return "{}"
    if isinstance(config, Mapping):
        return json.dumps(config)
    with open(os.fspath(config), encoding="utf-8") as f:
        return f.read()


def _list(overrides: Iterable[str] | None) -> list[str]:
    return list(overrides or [])


def load_config(config: ConfigLike = None, overrides: Iterable[str] | None = None) -> dict:
    """Validated configuration with every default filled in."""
    return json.loads(_flexsan.load(_doc(config), _list(overrides)))


def config_digest(config: ConfigLike = None, overrides: Iterable[str] | None = None) -> str:
    return _flexsan.digest(_doc(config), _list(overrides))


def run(
    config: ConfigLike = None,
    algorithm: str = "tago",
    seed: int = 1,
    *,
    overrides: Iterable[str] | None = None,
    record_runtime: bool = True,
    out_dir: str | os.PathLike[str] | None = None,
) -> dict:
    """One pass of the configured scenario.

    Returns the run summary with per-slot metrics under ``"metrics"`` as
    columns. With ``out_dir`` the usual metrics.csv and summary.json are
    written as well.
    """
    out = os.fspath(out_dir) if out_dir is not None else ""
    return json.loads(_flexsan.run(_doc(config), _list(overrides), algorithm, seed, record_runtime, out))


def sweep(
    counts: Sequence[int] = (50, 100, 150, 200, 250),
    algorithms: Sequence[str] = ("tago", "static-gnb", "static-du"),
    config: ConfigLike = None,
    seeds: Sequence[int] | None = None,
    *,
    overrides: Iterable[str] | None = None,
    threads: int = 1,
    record_runtime: bool = True,
) -> list[dict]:
    """Constant-load runs over counts x algorithms x seeds (in that order)."""
    raw = _flexsan.sweep(
        _doc(config), _list(overrides), list(counts), ",".join(algorithms), list(seeds or []), threads, record_runtime
    )
    return json.loads(raw)


def check(
    config: ConfigLike = None,
    instances: int = 100,
    users: int = 0,
    seed: int = 1,
    *,
    overrides: Iterable[str] | None = None,
) -> dict:
    """tago against the exact oracle on small random instances."""
    return json.loads(_flexsan.check(_doc(config), _list(overrides), instances, users, seed))


def solve(
    users: Sequence[Mapping[str, Any]],
    algorithm: str = "tago",
    config: ConfigLike = None,
    *,
    overrides: Iterable[str] | None = None,
) -> dict:
    """One slot on an explicit user list.

    Each user is a mapping with ``r_min`` (bit/s), ``t_max`` (s),
    ``snr_linear`` and ``distance_m``; ``id`` defaults to the list position.
    """
    return json.loads(_flexsan.solve(_doc(config), _list(overrides), json.dumps(list(users)), algorithm))
