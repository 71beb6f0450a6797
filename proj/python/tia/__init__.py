"""Transit incident analytics: redundancy, headways, demand flows, behavior.

Thin dict-level wrappers around the compiled core. Network and incident
documents are plain dicts matching the on-disk JSON schemas; bulk inputs
(AVL, AFC, logs, observation tables) are passed as file paths.
"""

from __future__ import annotations

import json as _json
import os as _os
import tempfile as _tempfile
from typing import Any, Iterable, Mapping, Sequence, Tuple

from . import _core

__version__ = _core.__version__

__all__ = [
    "path_throughput",
    "throughput_report",
    "station_sweep",
    "select_normal_days",
    "headway_series",
    "demand_report",
    "fit_observations",
    "fit_table",
    "sensitivity",
    "generate_scenario",
    "report_scenario",
    "run_cli",
]


def _dump(doc: Any) -> str:
    return doc if isinstance(doc, str) else _json.dumps(doc)


def path_throughput(headway: float, capacity: float, travel_time: float,
                    duration: float) -> float:
    """Hourly passengers one path can move during a disruption window."""
    return _core.path_throughput(headway, capacity, travel_time, duration)


def throughput_report(network: Mapping[str, Any], incident: Mapping[str, Any],
                      ods: Iterable[Tuple[str, str]], *, k: int = 5, max_transfers: int = 3,
                      max_detour_ratio: float = 3.0, buffer_minutes: float = 0.0) -> dict:
    """Per-OD before/after throughput and the redundancy index."""
    return _json.loads(_core.throughput_report(
        _dump(network), _dump(incident), [tuple(od) for od in ods], k, max_transfers,
        max_detour_ratio, buffer_minutes))


def station_sweep(network: Mapping[str, Any], incident_log: str, *, k: int = 5,
                  max_transfers: int = 3, max_detour_ratio: float = 3.0,
                  duration: float = 60.0, log_years: float = 1.0,
                  threads: int = 0) -> list:
    """Hypothetical per-station blockage scores with quadrant labels."""
    return _json.loads(_core.station_sweep(
        _dump(network), _os.fspath(incident_log), k, max_transfers, max_detour_ratio,
        duration, log_years, threads))


def select_normal_days(network: Mapping[str, Any], incident: Mapping[str, Any],
                       incident_log: str, *, window_weeks: int = 8,
                       buffer_minutes: float = 60.0) -> dict:
    """Same-weekday baseline days before the incident, minus logged-incident days."""
    return _json.loads(_core.select_normal_days(
        _dump(network), _dump(incident), _os.fspath(incident_log), window_weeks,
        buffer_minutes))


def headway_series(avl: str, line: str, *, interval_minutes: float = 15.0,
                   incident_date: str, normal_dates: Sequence[str]) -> dict:
    """Interval headways on the incident day against the baseline band."""
    return _json.loads(_core.headway_series(
        _os.fspath(avl), line, interval_minutes, incident_date, list(normal_dates)))


def demand_report(network: Mapping[str, Any], afc: str, incident: Mapping[str, Any],
                  scope: str, normal_dates: Sequence[str], *,
                  interval_minutes: float = 15.0) -> dict:
    """Tap-in counts for one scope with 2-sigma significance and deltas."""
    return _json.loads(_core.demand_report(
        _dump(network), _os.fspath(afc), _dump(incident), scope, list(normal_dates),
        interval_minutes))


def fit_observations(observations: str, features: Sequence[str] = ()) -> dict:
    """Binary logit fit of an observation table; empty features means the full spec."""
    return _json.loads(_core.fit_observations(_os.fspath(observations), list(features)))


def fit_table(fit: Mapping[str, Any]) -> str:
    """Regression-style text table for a stored fit."""
    return _core.fit_table(_dump(fit))


def sensitivity(fit: Mapping[str, Any], *, grid: str = "0:1:0.05",
                overrides: Mapping[str, float] | None = None) -> dict:
    """Choice probability and elasticity swept over OD redundancy."""
    return _json.loads(_core.sensitivity(_dump(fit), grid, dict(overrides or {})))


def generate_scenario(config: Mapping[str, Any] | str, out: str) -> dict:
    """Write a deterministic synthetic scenario; returns its ground truth."""
    if isinstance(config, (str, _os.PathLike)):
        return _json.loads(_core.generate_scenario(_os.fspath(config), _os.fspath(out)))
    handle = _tempfile.NamedTemporaryFile("w", suffix=".json", delete=False)
    try:
        _json.dump(config, handle)
        handle.close()
        return _json.loads(_core.generate_scenario(handle.name, _os.fspath(out)))
    finally:
        _os.unlink(handle.name)


def report_scenario(scenario: str, out: str) -> dict:
    """Run the full incident dossier over a scenario directory."""
    return _json.loads(_core.report_scenario(_os.fspath(scenario), _os.fspath(out)))


def run_cli(args: Sequence[str]) -> int:
    """Invoke the command-line interface; returns its exit code."""
    return _core.run_cli(list(args))
