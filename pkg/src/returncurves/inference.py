"""Bootstrap uncertainty along rays and the survival-region diagnostic.

Every angle of an :class:`~returncurves.curves.AngleGrid` picks out one
point on each (enforced) curve estimate, so the sampling distribution of a
curve reduces to the distribution of the distance ``d`` along each ray.
Quantiles of ``d`` over bootstrap replicates give pointwise confidence
intervals; joining them across angles gives band curves.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curves import AngleGrid, ReturnCurve, intersect_rays, points_on_rays, points_to_csv
from .exceptions import EstimationError
from .rng import derive_seed, make_rng

RESAMPLE_MODES = ("iid", "block", "identity")
MAX_FAILURE_FRACTION = 0.10


@dataclass(frozen=True)
class Resampler:
    """How bootstrap replicates are drawn.

    ``identity`` returns the original sample on every replicate, which
    collapses all bands to the point estimate; it is a debugging aid.
    """

    mode: str = "iid"
    seed: int = 0
    K: int = 1000
    block_size: int | None = None

    def __post_init__(self):
        if self.mode not in RESAMPLE_MODES:
            raise ValueError(f"resampling mode must be one of {RESAMPLE_MODES}")
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.mode == "block":
            if self.block_size is None or self.block_size < 1:
                raise ValueError("block resampling needs block_size >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed must be nonnegative")

    def to_dict(self) -> dict:
        return {"mode": self.mode, "seed": int(self.seed), "K": int(self.K), "block_size": self.block_size}


def resample_indices(n: int, resampler: Resampler, replicate: int) -> np.ndarray:
    """Row indices of bootstrap replicate ``replicate``; deterministic per (seed, replicate)."""
    if resampler.mode == "identity":
        return np.arange(n)
    rng = make_rng(resampler.seed, replicate)
    if resampler.mode == "iid":
        return rng.integers(0, n, n)
    b = resampler.block_size
    if b > n:
        raise ValueError(f"block size {b} exceeds the sample size {n}")
    starts = rng.integers(0, n - b + 1, math.ceil(n / b))
    return (starts[:, None] + np.arange(b)).ravel()[:n]


def resample(sample, resampler: Resampler, replicate: int) -> np.ndarray:
    """Bootstrap replicate of a sample, same size as the input."""
    sample = np.asarray(sample)
    return sample[resample_indices(len(sample), resampler, replicate)]


def autocorrelation(x, max_lag: int = 60) -> np.ndarray:
    """Sample autocorrelations at lags ``1..max_lag``."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    denom = np.dot(x, x)
    n = x.size
    lags = range(1, min(max_lag, n - 1) + 1)
    if denom == 0:
        return np.zeros(len(lags))
    return np.array([np.dot(x[:-k], x[k:]) / denom for k in lags])


def _tail_probs(level: float) -> tuple[float, float]:
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    a = (1.0 - level) / 2.0
    return a, 1.0 - a


def anchor_to_reference(curve: ReturnCurve, reference) -> ReturnCurve:
    """Extend the curve ends to the reference lines ``x = x0`` and ``y = y0``.

    On native margins a replicate's lower marginal endpoints are its own
    sample minima, which can lie inside the reference point taken from the
    full sample; the extension keeps every ray crossing.
    """
    x0, y0 = reference
    pts = np.array(curve.points, dtype=float)
    if pts[0, 0] > x0:
        pts = np.vstack([[x0, pts[0, 1]], pts])
    if pts[-1, 1] > y0:
        pts = np.vstack([pts, [pts[-1, 0], y0]])
    if len(pts) == len(curve.points):
        return curve
    return ReturnCurve(curve.p, pts, curve.margin, curve.enforced)


@dataclass(frozen=True, eq=False)
class BootstrapCurveSummary:
    """Per-angle distribution of ray distances over bootstrap replicates."""

    grid: AngleGrid
    norms: np.ndarray
    p: float
    margin: str
    level: float = 0.95
    failures: int = 0

    def quantile(self, q) -> np.ndarray:
        return np.quantile(self.norms, q, axis=0)

    @property
    def median(self) -> np.ndarray:
        return self.quantile(0.5)

    @property
    def mean(self) -> np.ndarray:
        return self.norms.mean(axis=0)

    @property
    def lower(self) -> np.ndarray:
        return self.quantile(_tail_probs(self.level)[0])

    @property
    def upper(self) -> np.ndarray:
        return self.quantile(_tail_probs(self.level)[1])

    def _curve(self, d) -> ReturnCurve:
        return ReturnCurve(self.p, points_on_rays(d, self.grid.angles, self.grid.reference), self.margin)

    @property
    def median_curve(self) -> ReturnCurve:
        return self._curve(self.median)

    @property
    def mean_curve(self) -> ReturnCurve:
        return self._curve(self.mean)

    @property
    def lower_curve(self) -> ReturnCurve:
        return self._curve(self.lower)

    @property
    def upper_curve(self) -> ReturnCurve:
        return self._curve(self.upper)

    def quantile_labels(self) -> tuple[str, str]:
        lo, hi = _tail_probs(self.level)
        return f"{lo:g}", f"{hi:g}"

    def table(self) -> tuple[tuple[str, ...], np.ndarray]:
        """Header and rows of the per-angle summary."""
        lo_lab, hi_lab = self.quantile_labels()
        cols = {"theta": self.grid.angles}
        for name, d in (("mean", self.mean), ("median", self.median), (f"q{lo_lab}", self.lower), (f"q{hi_lab}", self.upper)):
            xy = points_on_rays(d, self.grid.angles, self.grid.reference)
            cols[f"d_{name}"] = d
            cols[f"x_{name}"] = xy[:, 0]
            cols[f"y_{name}"] = xy[:, 1]
        return tuple(cols), np.column_stack(list(cols.values()))

    def to_csv(self) -> str:
        header, rows = self.table()
        return points_to_csv(rows, header)

    def to_dict(self) -> dict:
        header, rows = self.table()
        return {
            "p": self.p,
            "margin": self.margin,
            "level": self.level,
            "replicates": int(self.norms.shape[0]),
            "failures": self.failures,
            "reference": list(self.grid.reference),
            "columns": list(header),
            "rows": rows.tolist(),
        }


Estimator = Callable[..., ReturnCurve]


def replicate_norms(sample, estimator: Estimator, grid: AngleGrid, resampler: Resampler, k: int):
    """Ray distances of the curve fitted to bootstrap replicate ``k``."""
    rep = resample(sample, resampler, k)
    curve = estimator(rep, derive_seed(resampler.seed, k, 1))
    curve = anchor_to_reference(curve, grid.reference)
    return intersect_rays(curve, grid.angles, grid.reference)[2]


def bootstrap_norms(sample, estimator: Estimator, grid: AngleGrid, resampler: Resampler):
    """``(norms, failures)`` over all replicates; failed replicates are dropped.

    Raises
    ------
    EstimationError
        When more than 10% of the replicates fail.
    """
    rows = []
    failures = 0
    for k in range(resampler.K):
        try:
            rows.append(replicate_norms(sample, estimator, grid, resampler, k))
        except (EstimationError, ValueError, ArithmeticError):
            failures += 1
    if failures > MAX_FAILURE_FRACTION * resampler.K or not rows:
        raise EstimationError(f"{failures} of {resampler.K} bootstrap replicates failed")
    if failures:
        warnings.warn(f"{failures} of {resampler.K} bootstrap replicates failed and were dropped", stacklevel=2)
    return np.vstack(rows), failures


def bootstrap_curve_summary(
    sample, estimator: Estimator, grid: AngleGrid, resampler: Resampler, level: float = 0.95, p=None, margin=None
):
    """Bootstrap the sample, re-estimate the curve and summarise ray distances per angle.

    Parameters
    ----------
    sample : array_like, shape (n, 2)
    estimator : callable
        ``estimator(sample, seed) -> ReturnCurve``, for example a
        :class:`~returncurves.pipeline.CurveEstimator`.
    grid : AngleGrid
        Angles and ray origin. Use the origin on exponential margins and
        the sample minima on native margins.
    resampler : Resampler
    level : float
        Nominal coverage of the pointwise intervals.
    p, margin : optional
        Curve probability and margin of the summary curves; read from the
        estimator's attributes when omitted.
    """
    _tail_probs(level)
    p = getattr(estimator, "p", None) if p is None else p
    margin = getattr(estimator, "margin", "exponential") if margin is None else margin
    if p is None:
        raise ValueError("p must be given for estimators without a p attribute")
    sample = np.asarray(sample, dtype=float)
    norms, failures = bootstrap_norms(sample, estimator, grid, resampler)
    return BootstrapCurveSummary(grid, norms, p, margin, level, failures)


@dataclass(frozen=True, eq=False)
class DiagnosticReport:
    """Bootstrap distribution of the empirical survival probability at each curve point."""

    grid: AngleGrid
    p: float
    phat: np.ndarray
    curve_points: np.ndarray
    level: float = 0.95

    @property
    def phat_median(self) -> np.ndarray:
        return np.quantile(self.phat, 0.5, axis=0)

    @property
    def phat_lower(self) -> np.ndarray:
        return np.quantile(self.phat, _tail_probs(self.level)[0], axis=0)

    @property
    def phat_upper(self) -> np.ndarray:
        return np.quantile(self.phat, _tail_probs(self.level)[1], axis=0)

    def contains_p(self) -> np.ndarray:
        return (self.phat_lower <= self.p) & (self.p <= self.phat_upper)

    def table(self):
        lo, hi = _tail_probs(self.level)
        header = ("theta", "x", "y", "p", "median", f"q{lo:g}", f"q{hi:g}")
        rows = np.column_stack(
            [
                self.grid.angles,
                self.curve_points[:, 0],
                self.curve_points[:, 1],
                np.full(len(self.grid.angles), self.p),
                self.phat_median,
                self.phat_lower,
                self.phat_upper,
            ]
        )
        return header, rows

    def to_csv(self) -> str:
        header, rows = self.table()
        return points_to_csv(rows, header)


def region_counts(sample, points) -> np.ndarray:
    """Indicator matrix: entry ``(j, i)`` is whether observation ``i`` lies beyond point ``j`` in both coordinates."""
    sample = np.asarray(sample, dtype=float)
    points = np.asarray(points, dtype=float)
    return (sample[None, :, 0] > points[:, None, 0]) & (sample[None, :, 1] > points[:, None, 1])


def diagnostic(sample, curve: ReturnCurve, grid: AngleGrid, resampler: Resampler, level: float = 0.95) -> DiagnosticReport:
    """Empirical probability of each survival region ``(x_j, inf) x (y_j, inf)`` under resampling.

    The curve points ``(x_j, y_j)`` are fixed once from ``curve`` and the
    grid; only the sample is resampled.
    """
    _tail_probs(level)
    sample = np.asarray(sample, dtype=float)
    n = len(sample)
    x, y, _ = intersect_rays(anchor_to_reference(curve, grid.reference), grid.angles, grid.reference)
    pts = np.column_stack([x, y])
    inside = region_counts(sample, pts).astype(float)
    phat = np.empty((resampler.K, len(pts)))
    for k in range(resampler.K):
        weights = np.bincount(resample_indices(n, resampler, k), minlength=n)
        phat[k] = inside @ weights / n
    return DiagnosticReport(grid, curve.p, phat, pts, level)
