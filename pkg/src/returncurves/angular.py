"""Return curves from the angular dependence function.

On standard exponential margins, ``T_w = min(X / w, Y / (1 - w))`` has an
exponential tail ``Pr(T_w > t) ~ L(e^t) exp(-lambda(w) t)``. The rate
``lambda(w)`` is estimated ray by ray as a reciprocal mean excess and
extrapolated from a base probability ``pstar`` down to ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import ReturnCurve, enforce_properties, marginal_return_level, points_to_csv
from .exceptions import EstimationError

MIN_EXCEEDANCES = 20


@dataclass(frozen=True, eq=False)
class AdfEstimate:
    """Pointwise angular dependence estimates on an equally spaced ray grid.

    ``rays`` holds the full grid including 0 and 1; ``lambda_hat`` has one
    entry per interior ray.
    """

    rays: np.ndarray
    lambda_hat: np.ndarray
    hill_threshold_prob: float = 0.95
    pstar: float = 0.05
    thresholds: np.ndarray | None = None

    @property
    def interior(self) -> np.ndarray:
        return self.rays[1:-1]

    def lower_bound(self) -> np.ndarray:
        return np.maximum(self.interior, self.rays[::-1][1:-1])

    def to_csv(self) -> str:
        return points_to_csv(np.column_stack([self.interior, self.lambda_hat]), header=("w", "lambda"))


def ray_grid(num_rays: int) -> np.ndarray:
    """Equally spaced rays on ``[0, 1]``, mirror-symmetric in floating point.

    The upper half is built as ``1 - w`` from the lower half, so each ray's
    mirror image is a grid value rather than a rounded neighbour of one.
    """
    if num_rays < 3:
        raise ValueError("need at least three rays so that one is interior")
    n = int(num_rays)
    rays = np.linspace(0.0, 1.0, n)
    k = n // 2
    rays[n - k:] = 1.0 - rays[:k][::-1]
    return rays


def min_projection(sample, w: float, w_complement: float | None = None) -> np.ndarray:
    """``T_w = min(X / w, Y / (1 - w))`` for every observation.

    ``w_complement`` overrides ``1 - w``; passing the mirrored grid value
    keeps estimates exactly symmetric under swapping the coordinates.
    """
    sample = np.asarray(sample, dtype=float)
    wc = 1.0 - w if w_complement is None else w_complement
    return np.minimum(sample[:, 0] / w, sample[:, 1] / wc)


def hill_rate(values, threshold: float) -> float:
    """Reciprocal mean excess of ``values`` above ``threshold``."""
    exc = values[values > threshold] - threshold
    if exc.size < MIN_EXCEEDANCES:
        raise EstimationError(f"only {exc.size} exceedances above the threshold, need {MIN_EXCEEDANCES}")
    return exc.size / exc.sum()


def _check_sample(sample):
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[1] != 2 or sample.shape[0] == 0:
        raise ValueError("sample must have shape (n, 2)")
    if np.any(sample < 0):
        raise ValueError("sample must be on standard exponential margins (nonnegative)")
    return sample


def adf_estimate(sample, num_rays: int = 151, hill_threshold_prob: float = 0.95, pstar: float | None = None) -> AdfEstimate:
    """Estimate the angular dependence function at each interior ray.

    ``lambda_hat`` is projected onto the admissible region
    ``lambda(w) >= max(w, 1 - w)``. If ``pstar`` is given, the
    ``(1 - pstar)`` quantiles of ``T_w`` are stored as ``thresholds`` for
    later extrapolation.
    """
    sample = _check_sample(sample)
    rays = ray_grid(num_rays)
    lam = np.empty(rays.size - 2)
    base = None if pstar is None else np.empty(rays.size - 2)
    mirrored = rays[::-1]
    for i, w in enumerate(rays[1:-1]):
        t = min_projection(sample, w, mirrored[i + 1])
        if pstar is None:
            u = np.quantile(t, hill_threshold_prob)
        else:
            u, base[i] = np.quantile(t, [hill_threshold_prob, 1.0 - pstar])
        lam[i] = hill_rate(t, u)
    lam = np.maximum(lam, np.maximum(rays[1:-1], mirrored[1:-1]))
    rays.setflags(write=False)
    lam.setflags(write=False)
    return AdfEstimate(rays, lam, hill_threshold_prob, 0.05 if pstar is None else pstar, base)


def adf_to_eta(adf: AdfEstimate) -> float:
    """Coefficient of tail dependence ``1 / (2 lambda(1/2))``."""
    hit = np.flatnonzero(np.isclose(adf.interior, 0.5, rtol=0, atol=1e-12))
    if hit.size == 0:
        raise ValueError("ray w = 0.5 is not on the grid; use an odd number of rays")
    return float(1.0 / (2.0 * adf.lambda_hat[hit[0]]))


def wt_points(rays, lam, thresholds, p: float, pstar: float) -> np.ndarray:
    """Curve points ``(w (t + u), (1 - w)(t + u))`` with ``t = -log(p / pstar) / lambda``."""
    rays = np.asarray(rays, dtype=float)
    t = -np.log(p / pstar) / np.asarray(lam, dtype=float)
    r = t + np.asarray(thresholds, dtype=float)
    return np.column_stack([rays * r, (1.0 - rays) * r])


def wt_curve(sample, p: float, num_rays: int = 151, hill_threshold_prob: float = 0.95, pstar: float = 0.05) -> ReturnCurve:
    """Return-curve estimate on exponential margins from the angular dependence function.

    Parameters
    ----------
    sample : array_like, shape (n, 2)
        Observations on standard exponential margins.
    p : float
        Curve probability, ``p < pstar``.
    num_rays : int
        Size of the ray grid on ``[0, 1]``; the two end rays are not
        estimated since the curve endpoints are known exactly.
    hill_threshold_prob : float
        Quantile level of ``T_w`` above which the rate is estimated.
    pstar : float
        Base probability of the extrapolation.
    """
    sample = _check_sample(sample)
    if not 0 < p < pstar < 1:
        raise ValueError("need 0 < p < pstar < 1")
    if pstar * sample.shape[0] < MIN_EXCEEDANCES:
        raise ValueError(f"pstar must be at least {MIN_EXCEEDANCES}/n for the base quantile to be estimable")
    adf = adf_estimate(sample, num_rays, hill_threshold_prob, pstar)
    pts = wt_points(adf.interior, adf.lambda_hat, adf.thresholds, p, pstar)
    level = marginal_return_level(p)
    pts = np.vstack([[0.0, level], pts, [level, 0.0]])
    return enforce_properties(ReturnCurve(p, pts, "exponential"))
