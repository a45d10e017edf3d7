"""Monte Carlo SER sweeps over SNR and report emission.

Every (SNR point, trial) pair owns an independent random substream derived
from the master seed, so all detectors in a cell see the same channel,
symbols and noise, and results do not depend on the trial count or on
how trials are split across workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import detectors as det
from .channel import (
    LinearSystem,
    real_channel_matrix,
    sample_channel,
    sample_real_channel,
    snr_to_noise_variance,
    transmit,
)
from .constellation import make_qam
from .errors import InvalidArgumentError
from .posterior import mmse_posterior, squared_correlations
from .tree import format_edges

CSV_FIELDS = (
    "snr_db",
    "detector",
    "trials",
    "symbol_errors",
    "ser",
    "vector_error_rate",
    "max_detect_time_us",
    "mean_detect_time_us",
)
TIMING_FIELDS = ("max_detect_time_us", "mean_detect_time_us")
SNR_CONVENTION = "Es/N0 = n_real_vars * e / sigma2, sigma2 per real noise component"

_GTA_FLAGS = {
    "line": ("tree_kind", "line"),
    "chowliu": ("tree_kind", "chowliu"),
    "zf": ("variant", "zf"),
    "bayesian": ("variant", "bayesian"),
    "max": ("mode", "max"),
    "sum": ("mode", "sum"),
}
_PLAIN = {"zf", "mmse", "sic", "ml", "loopybp"}


def parse_detector(spec):
    """Split a detector spec such as ``gta:line:max`` into (name, options)."""
    name, *flags = spec.strip().split(":")
    if name in _PLAIN and not flags:
        return name, {}
    if name == "gta":
        opts = {}
        for f in flags:
            if f not in _GTA_FLAGS:
                raise InvalidArgumentError(f"unknown GTA flag {f!r} in {spec!r}")
            key, value = _GTA_FLAGS[f]
            opts[key] = value
        return name, opts
    raise InvalidArgumentError(f"unknown detector {spec!r}")


@dataclass(frozen=True)
class SimConfig:
    tx_antennas: int
    rx_antennas: int
    qam_order: int
    snr_grid_db: tuple
    trials_per_point: int
    detectors: tuple = ("zf", "mmse", "sic", "gta")
    master_seed: int = 0
    real_mode: bool = False
    output_format: str = "csv"
    ml_budget: int = det.DEFAULT_ML_BUDGET
    loopy_max_iters: int = 50

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if self.trials_per_point < 1:
            raise InvalidArgumentError("trials_per_point must be >= 1")
        if not self.snr_grid_db:
            raise InvalidArgumentError("SNR grid is empty")
        if not self.detectors:
            raise InvalidArgumentError("detector list is empty")
        if self.tx_antennas < 1 or self.rx_antennas < 1:
            raise InvalidArgumentError("antenna counts must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidArgumentError("master seed must be a 64-bit unsigned integer")
        if self.output_format not in ("csv", "json"):
            raise InvalidArgumentError(f"unknown output format {self.output_format!r}")
        for d in self.detectors:
            parse_detector(d)
        make_qam(self.qam_order)

    @property
    def constellation(self):
        return make_qam(self.qam_order)

    @property
    def n_vars(self):
        """Number of real unknowns per transmitted vector."""
        return self.tx_antennas if self.real_mode else 2 * self.tx_antennas


@dataclass
class CellResult:
    snr_db: float
    detector: str
    trials: int
    symbol_errors: int
    ser: float
    vector_error_rate: float
    max_detect_time_us: float
    mean_detect_time_us: float
    complex_symbol_errors: Optional[int] = None
    complex_ser: Optional[float] = None


@dataclass
class SimReport:
    config: SimConfig
    symbols_per_trial: int
    cells: list = field(default_factory=list)

    def cell(self, snr_db, detector):
        for c in self.cells:
            if c.snr_db == snr_db and c.detector == detector:
                return c
        raise KeyError((snr_db, detector))

    def to_dict(self):
        cfg = asdict(self.config)
        cfg["snr_grid_db"] = list(cfg["snr_grid_db"])
        cfg["detectors"] = list(cfg["detectors"])
        return {
            "config": cfg,
            "seed": self.config.master_seed,
            "snr_convention": SNR_CONVENTION,
            "symbols_per_trial": self.symbols_per_trial,
            "cells": [asdict(c) for c in self.cells],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            config=SimConfig(**d["config"]),
            symbols_per_trial=d["symbols_per_trial"],
            cells=[CellResult(**c) for c in d["cells"]],
        )


def draw_instance(cfg, point, trial):
    """Channel, transmitted symbols and observation for one trial.

    Returns ``(system, x)`` with `system` carrying the observation.
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=(point, trial)))
    c = cfg.constellation
    if cfg.real_mode:
        H = sample_real_channel(cfg.rx_antennas, cfg.tx_antennas, rng)
        n_complex = None
    else:
        H = real_channel_matrix(sample_channel(cfg.rx_antennas, cfg.tx_antennas, rng))
        n_complex = cfg.tx_antennas
    sigma2 = snr_to_noise_variance(cfg.snr_grid_db[point], cfg.n_vars, c.energy)
    x = c.points[rng.integers(0, len(c), size=cfg.n_vars)]
    system = LinearSystem(H, sigma2, n_complex=n_complex)
    return system.with_observation(transmit(system, x, rng)), x


def _run_detector(name, opts, system, c, cfg):
    if name == "zf":
        return det.detect_zf(system, c)
    if name == "mmse":
        return det.detect_mmse(system, c)
    if name == "sic":
        return det.detect_mmse_sic(system, c)
    if name == "gta":
        return det.detect_gta(system, c, **opts)
    if name == "ml":
        return det.detect_ml(system, c, budget=cfg.ml_budget)
    if name == "loopybp":
        return det.detect_loopy_bp(system, c, max_iters=cfg.loopy_max_iters)
    raise InvalidArgumentError(f"unknown detector {name!r}")


def _run_block(cfg, point, trials, active):
    """Per-trial error counts and timings for a block of trial indices.

    Returns ``{detector: (errors, complex_errors, times)}``
    with one entry per trial, in trial order.
    """
    c = cfg.constellation
    specs = {d: parse_detector(d) for d in active}
    out = {d: ([], [], []) for d in active}
    nc = None if cfg.real_mode else cfg.tx_antennas
    for t in trials:
        system, x = draw_instance(cfg, point, t)
        for d, (name, opts) in specs.items():
            res = _run_detector(name, opts, system, c, cfg)
            wrong = res.hard != x
            cerr = int(np.count_nonzero(wrong[:nc] | wrong[nc:])) if nc else 0
            out[d][0].append(int(np.count_nonzero(wrong)))
            out[d][1].append(cerr)
            out[d][2].append(res.elapsed_us)
    return out


def _refused(cfg, name):
    if name == "ml":
        total = len(cfg.constellation) ** cfg.n_vars
        return total > cfg.ml_budget
    return False


def run_sweep(cfg, workers=1, chunk=2000):
    """Run every configured detector on the same instances at every SNR point."""
    n = cfg.n_vars
    report = SimReport(cfg, n)
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for point, snr in enumerate(cfg.snr_grid_db):
            active = [d for d in cfg.detectors if not _refused(cfg, parse_detector(d)[0])]
            if not active:
                continue
            blocks = [range(s, min(s + chunk, cfg.trials_per_point))
                      for s in range(0, cfg.trials_per_point, chunk)]
            if pool is None:
                parts = [_run_block(cfg, point, b, active) for b in blocks]
            else:
                parts = list(pool.map(_run_block, [cfg] * len(blocks), [point] * len(blocks),
                                      blocks, [active] * len(blocks)))
            for d in active:
                errs = np.concatenate([p[d][0] for p in parts]).astype(np.int64)
                cerrs = np.concatenate([p[d][1] for p in parts]).astype(np.int64)
                times = np.concatenate([p[d][2] for p in parts])
                trials = errs.size
                cell = CellResult(
                    snr_db=snr,
                    detector=d,
                    trials=trials,
                    symbol_errors=int(errs.sum()),
                    ser=float(errs.sum() / (trials * n)),
                    vector_error_rate=float(np.count_nonzero(errs) / trials),
                    max_detect_time_us=float(times.max()),
                    mean_detect_time_us=float(times.mean()),
                )
                if not cfg.real_mode:
                    cell.complex_symbol_errors = int(cerrs.sum())
                    cell.complex_ser = float(cerrs.sum() / (trials * cfg.tx_antennas))
                report.cells.append(cell)
    finally:
        if pool is not None:
            pool.shutdown()
    return report


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(report, fmt="csv", include_timing=True):
    """Serialize a report as CSV or JSON bytes."""
    if fmt == "csv":
        fields = [f for f in CSV_FIELDS if include_timing or f not in TIMING_FIELDS]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for c in report.cells:
            w.writerow([_fmt(getattr(c, f)) for f in fields])
        return buf.getvalue().encode("ascii")
    if fmt == "json":
        d = report.to_dict()
        if not include_timing:
            for c in d["cells"]:
                for f in TIMING_FIELDS:
                    c.pop(f)
        return (json.dumps(d, indent=2) + "\n").encode("ascii")
    raise InvalidArgumentError(f"unknown output format {fmt!r}")


def write_report(report, path, fmt="csv"):
    data = emit_report(report, fmt)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report to {path}: {exc.strerror}") from exc


def dump_trees(cfg, trial=0):
    """Chow-Liu tree of the Bayesian posterior for one trial at every SNR point."""
    chunks = []
    for point, snr in enumerate(cfg.snr_grid_db):
        system, _ = draw_instance(cfg, point, trial)
        post = mmse_posterior(system, cfg.constellation.energy)
        w = squared_correlations(post)
        tree = det.gta_tree(post)
        chunks.append(f"# snr_db={snr!r} trial={trial}\n" + format_edges(tree, w))
    return "".join(chunks)


def snr_grid(start, stop, step):
    """Inclusive arithmetic grid ``start, start+step, ..., <= stop``."""
    if step <= 0:
        raise InvalidArgumentError("SNR step must be positive")
    if stop < start:
        raise InvalidArgumentError("SNR stop is below start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


def binomial_sd(p, n):
    """Standard deviation of an empirical rate with true value `p` over `n` draws."""
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)
