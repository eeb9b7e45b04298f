"""Offline Bayesian refit of recorded evidence.

Each shot's evidence is a sequence of (evolution time, inversion angle,
outcome) tuples.  The per-datum likelihood of an eigenphase phi (radians) is

    cos^2((phi - phi_inv) * t / 2)   for outcome 0
    sin^2((phi - phi_inv) * t / 2)   for outcome 1

and the product over a record, evaluated on a discrete grid of candidate
phases, gives a posterior whose mean is the minimum-mean-squared-error
estimate.  Everything is computed in log space with max subtraction; each
log factor is floored at -745 so contradictory evidence stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import fixedpoint as fx
from .errors import DegeneratePosterior
from .sim import ShotRecord

LOG_FLOOR = -745.0


@dataclass(frozen=True)
class EvidenceRecord:
    """Evidence in radians: tuples (t, phi_inv, d)."""

    entries: tuple[tuple[float, float, int], ...]

    def __len__(self) -> int:
        return len(self.entries)


def _as_float(v) -> float:
    if isinstance(v, fx.FixedQ216):
        return v.value
    if isinstance(v, fx.Int18):
        return float(v.raw)
    return float(v)


def evidence_from_record(rec: ShotRecord) -> EvidenceRecord:
    """Convert a shot record's evidence to radians (angles were stored in
    units of pi; evolution times are plain scalars)."""
    return EvidenceRecord(tuple(
        (_as_float(t), _as_float(p) * math.pi, int(d))
        for t, p, d in rec.evidence))


@dataclass(frozen=True)
class PosteriorGrid:
    """Discrete distribution over candidate phases, in units of pi."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.nodes) < 2 or len(self.nodes) != len(self.weights):
            raise ValueError("grid needs >= 2 nodes with matching weights")


def uniform_grid(size: int = 2001,
                 interval: tuple[float, float] = (-1.0, 1.0)) -> PosteriorGrid:
    nodes = np.linspace(interval[0], interval[1], size)
    return PosteriorGrid(nodes, np.full(size, 1.0 / size))


def _log_factors(ev: EvidenceRecord, phis_rad: np.ndarray) -> np.ndarray:
    """Sum of floored per-datum log likelihoods at each candidate phase."""
    total = np.zeros_like(phis_rad)
    for t, phi_inv, d in ev.entries:
        half = 0.5 * t * (phis_rad - phi_inv)
        factor = np.cos(half) ** 2 if d == 0 else np.sin(half) ** 2
        with np.errstate(divide="ignore"):
            total += np.maximum(np.log(factor), LOG_FLOOR)
    return total


def log_likelihood(ev: EvidenceRecord, phi: float) -> float:
    """Log likelihood of eigenphase `phi` (radians) under the evidence."""
    return float(_log_factors(ev, np.asarray([phi], dtype=float))[0])


def posterior(ev: EvidenceRecord, grid: PosteriorGrid) -> PosteriorGrid:
    """Bayes update of `grid` by the whole evidence record."""
    with np.errstate(divide="ignore"):
        logw = np.where(grid.weights > 0.0,
                        np.log(np.maximum(grid.weights, 1e-300)), -np.inf)
    logw = logw + _log_factors(ev, grid.nodes * math.pi)
    m = np.max(logw)
    if not np.isfinite(m):
        raise DegeneratePosterior("no grid node carries posterior weight")
    w = np.exp(logw - m)
    total = w.sum()
    if total <= 0.0:
        raise DegeneratePosterior("posterior weights underflowed to zero")
    return PosteriorGrid(grid.nodes, w / total)


def mmse_estimate(grid: PosteriorGrid) -> float:
    """Posterior mean (units of pi)."""
    return float(np.dot(grid.weights, grid.nodes))


@dataclass(frozen=True)
class RefitResult:
    """Per-shot and pooled refits.  Estimates are reported on the doubled
    scale (2 * phase), matching the run-time estimate convention."""

    per_shot: tuple[float, ...]
    pooled: float
    mean: float
    mse: float | None          # vs true value, when known
    raw_mse: float | None      # run-time estimates' MSE, when comparable


def refit(records: Sequence[ShotRecord], grid_size: int = 2001,
          prior_interval: tuple[float, float] = (-1.0, 1.0),
          true_value: float | None = None,
          raw_estimates: Iterable[float] | None = None) -> RefitResult:
    """MMSE re-estimate per shot, plus a pooled estimate from all evidence.

    `true_value` and `raw_estimates` (both on the doubled scale) enable the
    mse / raw_mse summary fields.
    """
    if not records:
        raise ValueError("no records to refit")
    per_shot = []
    prior = uniform_grid(grid_size, prior_interval)
    pooled_grid = prior
    for rec in records:
        if not rec.evidence:
            raise ValueError(f"shot {rec.shot} has no evidence to refit")
        ev = evidence_from_record(rec)
        per_shot.append(2.0 * mmse_estimate(posterior(ev, prior)))
        pooled_grid = posterior(ev, pooled_grid)
    pooled = 2.0 * mmse_estimate(pooled_grid)
    arr = np.asarray(per_shot)
    mse = raw_mse = None
    if true_value is not None:
        mse = float(np.mean((arr - true_value) ** 2))
        if raw_estimates is not None:
            raw = np.asarray(list(raw_estimates))
            raw_mse = float(np.mean((raw - true_value) ** 2))
    return RefitResult(tuple(per_shot), pooled, float(arr.mean()), mse, raw_mse)
