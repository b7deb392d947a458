"""Simulation studies against copulas with known return curves.

Bias is summarised by ``A(d, dhat) = sum_j |d_j - dhat_j|`` over 150 angles,
with ``dhat`` the per-angle median over simulated datasets. Coverage is the
fraction of datasets whose bootstrap interval along a ray contains the true
curve point, at five fixed angles.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .copulas import CopulaSpec, copula_sample, true_ray_norms
from .curves import AngleGrid, ReturnCurve, angle_grid, intersect_rays
from .exceptions import EstimationError
from .inference import MAX_FAILURE_FRACTION, Resampler, bootstrap_norms, _tail_probs
from .pipeline import CurveEstimator
from .rng import derive_seed

COVERAGE_ANGLES = (5 * np.pi / 12, np.pi / 3, np.pi / 4, np.pi / 6, np.pi / 12)
STUDY_ANGLES = 150
_INCLUSION_TOL = 1e-9


def bias_statistic(true_d, est_d) -> float:
    """Sum of absolute differences between true and estimated ray distances.

    >>> bias_statistic([1, 2, 3], [2, 2, 1])
    3.0
    """
    true_d = np.asarray(true_d, dtype=float)
    est_d = np.asarray(est_d, dtype=float)
    if true_d.shape != est_d.shape:
        raise ValueError(f"length mismatch: {true_d.shape} vs {est_d.shape}")
    return float(np.abs(true_d - est_d).sum())


@dataclass(frozen=True, eq=False)
class FixedCurveEstimator:
    """Ignores the data and returns the same curve; used for self-checks."""

    curve: ReturnCurve

    @property
    def p(self):
        return self.curve.p

    @property
    def margin(self):
        return self.curve.margin

    def __call__(self, sample, seed=None) -> ReturnCurve:
        return self.curve

    def to_dict(self) -> dict:
        return {"kind": "fixed", "p": self.p}


def _resolve_estimator(estimator, p):
    if isinstance(estimator, str):
        return CurveEstimator(estimator, p)
    return estimator


def _estimator_label(estimator) -> str:
    return getattr(estimator, "kind", type(estimator).__name__)


def _dataset(spec: CopulaSpec, n: int, seed: int, i: int) -> np.ndarray:
    return copula_sample(spec, n, "exponential", derive_seed(seed, i, 0))


def _parallel_map(fn, args, workers: int):
    if workers <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*args)))


def _bias_task(spec, n, seed, i, estimator, angles):
    try:
        curve = estimator(_dataset(spec, n, seed, i), derive_seed(seed, i, 1))
        return intersect_rays(curve, angles)[2]
    except (EstimationError, ValueError, ArithmeticError):
        return None


def _check_failures(failures, total):
    if failures > MAX_FAILURE_FRACTION * total:
        raise EstimationError(f"estimator failed on {failures} of {total} datasets")


@dataclass(frozen=True, eq=False)
class BiasStudyResult:
    copula: CopulaSpec
    estimator: str
    p: float
    num_samples: int
    sample_size: int
    true_d: np.ndarray
    per_angle_median_d: np.ndarray
    failures: int = 0
    seed: int = 0
    elapsed: float = 0.0

    @property
    def A_value(self) -> float:
        return bias_statistic(self.true_d, self.per_angle_median_d)

    def to_dict(self) -> dict:
        return {
            "copula": self.copula.to_dict(),
            "estimator": self.estimator,
            "p": self.p,
            "num_samples": self.num_samples,
            "sample_size": self.sample_size,
            "seed": self.seed,
            "A": self.A_value,
            "failures": self.failures,
            "true_d": self.true_d.tolist(),
            "median_d": self.per_angle_median_d.tolist(),
        }


def run_bias_study(
    copula: CopulaSpec, estimator, p: float, num_samples: int, sample_size: int, seed: int, workers: int = 1
) -> BiasStudyResult:
    """Median ray distances over simulated datasets compared with the true curve.

    Parameters
    ----------
    copula : CopulaSpec
    estimator : {"ht", "wt"} or callable
        A name (default settings) or ``estimator(sample, seed) -> ReturnCurve``.
    p : float
    num_samples, sample_size : int
        Number of datasets and observations per dataset.
    seed : int
        Master seed; dataset ``i`` uses streams derived from ``(seed, i)``.
    workers : int
        Process count; results do not depend on it.
    """
    if not 0 < p < 0.05:
        raise ValueError("p must lie in (0, 0.05)")
    if num_samples < 1 or sample_size < 1:
        raise ValueError("num_samples and sample_size must be positive")
    est = _resolve_estimator(estimator, p)
    grid = angle_grid(STUDY_ANGLES)
    t0 = time.perf_counter()
    args = [(copula, sample_size, seed, i, est, grid.angles) for i in range(num_samples)]
    rows = _parallel_map(_bias_task, args, workers)
    good = [r for r in rows if r is not None]
    failures = len(rows) - len(good)
    _check_failures(failures, num_samples)
    median_d = np.median(np.vstack(good), axis=0)
    true_d = true_ray_norms(copula, p, grid.angles)
    return BiasStudyResult(
        copula, _estimator_label(est), p, num_samples, sample_size, true_d, median_d, failures, seed,
        time.perf_counter() - t0,
    )


def coverage_angles(copula: CopulaSpec, angles=COVERAGE_ANGLES) -> np.ndarray:
    """The study angles, trimmed to the first three for exchangeable copulas.

    Under exchangeability angles 4 and 5 mirror angles 2 and 1.
    """
    angles = np.asarray(angles, dtype=float)
    return angles[:3] if copula.exchangeable else angles


def _coverage_task(spec, n, seed, i, estimator, angles, K, level):
    grid = AngleGrid(len(angles), angles)
    sample = _dataset(spec, n, seed, i)
    resampler = Resampler("iid", derive_seed(seed, i, 2), K)
    try:
        norms, _ = bootstrap_norms(sample, estimator, grid, resampler)
    except EstimationError:
        return None
    lo, hi = _tail_probs(level)
    return np.quantile(norms, lo, axis=0), np.quantile(norms, hi, axis=0)


@dataclass(frozen=True, eq=False)
class CoverageStudyResult:
    copula: CopulaSpec
    estimator: str
    p: float
    angles: np.ndarray
    covered: np.ndarray
    true_d: np.ndarray
    num_samples: int
    K: int
    failures: int = 0
    level: float = 0.95
    seed: int = 0
    intervals: np.ndarray = field(default=None, repr=False)

    @property
    def coverage(self) -> np.ndarray:
        return self.covered.mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "copula": self.copula.to_dict(),
            "estimator": self.estimator,
            "p": self.p,
            "angles": self.angles.tolist(),
            "coverage": self.coverage.tolist(),
            "num_samples": self.num_samples,
            "K": self.K,
            "level": self.level,
            "seed": self.seed,
            "failures": self.failures,
        }


def run_coverage_study(
    copula: CopulaSpec,
    estimator,
    p: float,
    num_samples: int,
    sample_size: int,
    K: int,
    seed: int,
    angles=COVERAGE_ANGLES,
    level: float = 0.95,
    workers: int = 1,
) -> CoverageStudyResult:
    """Coverage of bootstrap intervals along rays at fixed angles.

    For each simulated dataset the ray distances of ``K`` bootstrap
    re-estimates give an interval per angle; the result records whether
    the true distance lies inside it.
    """
    if not 0 < p < 0.05:
        raise ValueError("p must lie in (0, 0.05)")
    if num_samples < 1 or sample_size < 1 or K < 1:
        raise ValueError("num_samples, sample_size and K must be positive")
    est = _resolve_estimator(estimator, p)
    angles = coverage_angles(copula, angles)
    true_d = true_ray_norms(copula, p, angles)
    args = [(copula, sample_size, seed, i, est, angles, K, level) for i in range(num_samples)]
    rows = _parallel_map(_coverage_task, args, workers)
    good = [r for r in rows if r is not None]
    failures = len(rows) - len(good)
    _check_failures(failures, num_samples)
    lo = np.vstack([g[0] for g in good])
    hi = np.vstack([g[1] for g in good])
    tol = _INCLUSION_TOL * np.maximum(1.0, true_d)
    covered = (lo - tol <= true_d) & (true_d <= hi + tol)
    return CoverageStudyResult(
        copula, _estimator_label(est), p, angles, covered, true_d, num_samples, K, failures, level, seed,
        np.stack([lo, hi], axis=-1),
    )
