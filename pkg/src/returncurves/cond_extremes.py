"""Return curves from the conditional extremes model.

On standard Laplace margins the model states that, above a high threshold
of the conditioning variable ``Y``,

    X = alpha * Y + Y**beta * Z,    Z ~ D independent of Y,

with ``alpha`` in ``[-1, 1]`` and ``beta < 1``. ``(alpha, beta)`` are fitted
by a Gaussian pseudo-likelihood for ``Z``; ``D`` itself is then represented
by the pool of fitted residuals.

A curve is assembled from two passes. The first conditions on ``Y`` and
walks ``y*`` down from the marginal ``(1 - p)`` quantile, taking
``x*`` as the ``1 - p/q`` conditional quantile of ``X | Y > y*`` with
``q = Pr(Y > y*)``, so that ``Pr(X > x*, Y > y*) = p``. It stops once
``x* >= y*``. The second pass conditions on ``X`` and covers the rest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .curves import ReturnCurve, enforce_properties
from .exceptions import EstimationError
from .margins import convert_margin
from .rng import make_rng

BETA_MAX = 1.0 - 1e-6
BETA_MIN = -5.0
MIN_EXCEEDANCES = 50
MIN_SAMPLE = 500
_VAR_FLOOR = 1e-12
_ROW_CHUNK = 16

DIRECTIONS = ("given_x", "given_y")


@dataclass(frozen=True, eq=False)
class CondExtFit:
    """Fitted conditional extremes model for one conditioning direction.

    ``direction="given_y"`` means ``Y`` is the conditioning variable and
    the residuals describe ``X``.
    """

    alpha: float
    beta: float
    threshold_u: float
    residuals: np.ndarray
    direction: str
    nll: float = float("nan")

    def __post_init__(self):
        if not -1.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [-1, 1]")
        if not self.beta <= BETA_MAX:
            raise ValueError("beta must be below 1")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        res = np.array(self.residuals, dtype=float)
        if res.ndim != 1 or res.size == 0:
            raise ValueError("residual pool must be a nonempty vector")
        res.setflags(write=False)
        object.__setattr__(self, "residuals", res)


def _profile_nll(alpha, beta, x, logy, y):
    """Gaussian pseudo-likelihood with mean and variance of Z profiled out.

    ``alpha`` and ``beta`` may be arrays of equal shape; the result has that shape.
    """
    alpha = np.asarray(alpha, dtype=float)[..., None]
    beta = np.asarray(beta, dtype=float)[..., None]
    z = (x - alpha * y) * np.exp(-beta * logy)
    var = np.maximum(z.var(axis=-1), _VAR_FLOOR)
    n = x.size
    return 0.5 * n * (np.log(var) + 1.0 + np.log(2 * np.pi)) + beta[..., 0] * logy.sum()


def fit_conditional(sample, direction: str = "given_y", threshold_prob: float = 0.95) -> CondExtFit:
    """Fit ``(alpha, beta)`` above the ``threshold_prob`` quantile of the conditioning variable.

    Parameters
    ----------
    sample : array_like, shape (n, 2)
        Observations on standard Laplace margins.
    direction : {"given_y", "given_x"}
        Which coordinate is conditioned on.
    threshold_prob : float
        Empirical quantile level of the conditioning threshold.

    Notes
    -----
    A coarse grid over ``alpha`` and ``beta`` picks the starting point for a
    bounded Nelder-Mead search; the profile likelihood is often bimodal
    under weak dependence and a single local start can miss the better mode.
    The grid includes ``alpha = +-1`` so that exactly dependent data, where
    the residual variance vanishes along ``alpha = 1``, reach that ridge.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[1] != 2:
        raise ValueError("sample must have shape (n, 2)")
    if not 0 < threshold_prob < 1:
        raise ValueError("threshold_prob must lie in (0, 1)")
    cond_col = 1 if direction == "given_y" else 0
    cond = sample[:, cond_col]
    other = sample[:, 1 - cond_col]
    u = float(np.quantile(cond, threshold_prob))
    keep = cond > u
    n_exc = int(keep.sum())
    if n_exc < MIN_EXCEEDANCES:
        raise EstimationError(f"only {n_exc} exceedances above the conditioning threshold, need {MIN_EXCEEDANCES}")
    y = cond[keep]
    x = other[keep]
    if np.any(y <= 0):
        raise EstimationError("conditioning values must be positive; is the sample on Laplace margins?")
    logy = np.log(y)

    ga, gb = np.meshgrid(np.linspace(-1.0, 1.0, 11), np.array([-0.5, 0.0, 0.25, 0.5, 0.75, 0.9]))
    grid_nll = _profile_nll(ga, gb, x, logy, y)
    k = np.unravel_index(np.argmin(grid_nll), grid_nll.shape)
    start = np.array([ga[k], gb[k]])

    def objective(theta):
        return float(_profile_nll(theta[0], theta[1], x, logy, y))

    res = minimize(
        objective,
        start,
        method="Nelder-Mead",
        bounds=[(-1.0, 1.0), (BETA_MIN, BETA_MAX)],
        options={"xatol": 1e-6, "fatol": 1e-8, "maxiter": 2000},
    )
    if not np.isfinite(res.fun):
        raise EstimationError("conditional extremes likelihood is not finite at the optimum")
    alpha = float(np.clip(res.x[0], -1.0, 1.0))
    beta = float(np.clip(res.x[1], BETA_MIN, BETA_MAX))
    resid = (x - alpha * y) * np.exp(-beta * logy)
    return CondExtFit(alpha, beta, u, resid, direction, float(res.fun))


@dataclass(frozen=True)
class HtCurveConfig:
    p: float
    quantile_grid_size: int = 200
    sim_draws: int = 10_000
    threshold_prob: float = 0.95

    def __post_init__(self):
        if not 0 < self.threshold_prob < 1:
            raise ValueError("threshold_prob must lie in (0, 1)")
        if not (0 < self.p and self.p + self.threshold_prob < 1):
            raise ValueError(
                f"p must lie in (0, {1 - self.threshold_prob:g}); the curve probability has to be "
                "smaller than the exceedance probability of the conditioning threshold"
            )
        if self.quantile_grid_size < 1 or self.sim_draws < 1:
            raise ValueError("quantile_grid_size and sim_draws must be positive")


def laplace_tail_prob(level):
    """``Pr(Y > level)`` for standard Laplace ``Y``."""
    level = np.asarray(level, dtype=float)
    return np.where(level >= 0, 0.5 * np.exp(-level), 1.0 - 0.5 * np.exp(level))


def laplace_upper_quantile(p: float) -> float:
    """The Laplace value exceeded with probability ``p < 1/2``."""
    return float(-np.log(2.0 * p))


def _row_quantiles(draws, levels):
    """Linear-interpolation quantile of each row at its own level."""
    m = draws.shape[1]
    pos = levels * (m - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, m - 1)
    out = np.empty(len(levels))
    for i, row in enumerate(draws):
        part = np.partition(row, (lo[i], hi[i]))
        out[i] = part[lo[i]] + (pos[i] - lo[i]) * (part[hi[i]] - part[lo[i]])
    return out


def conditional_quantiles(fit: CondExtFit, levels, p: float, draws: int, rng, stop_when_crossed=False):
    """``(1 - p/q)`` conditional quantiles for a sequence of conditioning levels.

    Returns the quantiles for the levels processed. With
    ``stop_when_crossed`` processing ends at the first level whose quantile
    reaches the level itself; that crossing point is included.
    """
    levels = np.asarray(levels, dtype=float)
    q = laplace_tail_prob(levels)
    probs = 1.0 - p / q
    if np.any(probs < 0):
        raise ValueError("conditioning levels must have exceedance probability at least p")
    e = rng.standard_exponential(draws)
    z = fit.residuals[rng.integers(0, fit.residuals.size, draws)]
    out = []
    for start in range(0, len(levels), _ROW_CHUNK):
        lv = levels[start:start + _ROW_CHUNK]
        y = lv[:, None] + e
        sims = fit.alpha * y + np.exp(fit.beta * np.log(y)) * z
        qs = _row_quantiles(sims, probs[start:start + _ROW_CHUNK])
        if stop_when_crossed:
            crossed = np.flatnonzero(qs >= lv)
            if crossed.size:
                out.append(qs[: crossed[0] + 1])
                break
        out.append(qs)
    return np.concatenate(out) if out else np.empty(0)


def _open_grid(lo: float, hi: float, size: int) -> np.ndarray:
    """``size`` equally spaced points strictly inside ``(lo, hi)``, ascending."""
    if not hi > lo:
        return np.empty(0)
    return np.linspace(lo, hi, size + 2)[1:-1]


def ht_curve_laplace(sample_laplace, config: HtCurveConfig, seed=None):
    """Raw curve points on Laplace margins together with both fits.

    Returns ``(points, fit_y, fit_x)``; points from the ``Y``-conditioned
    pass come first, in the order they were generated.
    """
    rng = make_rng(seed)
    fit_y = fit_conditional(sample_laplace, "given_y", config.threshold_prob)
    fit_x = fit_conditional(sample_laplace, "given_x", config.threshold_prob)
    top = laplace_upper_quantile(config.p)

    ys = _open_grid(fit_y.threshold_u, top, config.quantile_grid_size)[::-1]
    if ys.size == 0:
        raise EstimationError("empty quantile grid: conditioning threshold exceeds the marginal return level")
    xs_region1 = conditional_quantiles(fit_y, ys, config.p, config.sim_draws, rng, stop_when_crossed=True)
    ys = ys[: xs_region1.size]
    crossed = xs_region1.size > 0 and xs_region1[-1] >= ys[-1]
    start = float(xs_region1[-1]) if crossed else fit_x.threshold_u

    xs = _open_grid(start, top, config.quantile_grid_size)
    ys_region2 = conditional_quantiles(fit_x, xs, config.p, config.sim_draws, rng)
    points = np.vstack([np.column_stack([xs_region1, ys]), np.column_stack([xs, ys_region2])])
    return points, fit_y, fit_x


def ht_curve(sample, config: HtCurveConfig, seed=None) -> ReturnCurve:
    """Return-curve estimate on exponential margins from the conditional extremes model.

    Parameters
    ----------
    sample : array_like, shape (n, 2)
        Observations on standard exponential margins, ``n >= 500``.
    config : HtCurveConfig
    seed : int, Generator or None
        Drives the conditional simulations.

    Returns
    -------
    ReturnCurve
        Enforced curve on exponential margins.
    """
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[1] != 2:
        raise ValueError("sample must have shape (n, 2)")
    if sample.shape[0] < MIN_SAMPLE:
        raise ValueError(f"need at least {MIN_SAMPLE} observations, got {sample.shape[0]}")
    lap = convert_margin(sample, "exponential", "laplace")
    points, _, _ = ht_curve_laplace(lap, config, seed)
    expo = convert_margin(points, "laplace", "exponential")
    return enforce_properties(ReturnCurve(config.p, expo, "exponential"))
