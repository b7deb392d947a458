"""Univariate tail models and marginal transformations.

The semi-parametric marginal model combines an empirical rank transform
below a high threshold with a generalised Pareto (GPD) tail above it.
Values move between margins through a pair of probabilities ``(cdf, sf)``
so that upper-tail values keep full relative precision: a standard
exponential value of 30 has ``sf = 9.4e-14``, which ``1 - cdf`` could not
represent.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .exceptions import ConvergenceWarning

MARGINS = ("native", "uniform", "exponential", "laplace", "frechet")
STANDARD_MARGINS = MARGINS[1:]

XI_BOUNDS = (-0.95, 5.0)
_XI_ZERO = 1e-6
_ONE_MINUS = np.nextafter(1.0, 0.0)


# ---------------------------------------------------------------------------
# GPD primitives
# ---------------------------------------------------------------------------

def _gpd_log_sf(x, sigma, xi):
    """log of the GPD survival function for excesses ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    if abs(xi) < _XI_ZERO:
        return -x / sigma
    z = 1.0 + xi * x / sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(z > 0, -np.log(np.where(z > 0, z, 1.0)) / xi, -np.inf)
    return out


def gpd_cdf(x, sigma, xi):
    """GPD distribution function ``1 - (1 + xi x / sigma)_+^(-1/xi)``.

    >>> float(gpd_cdf(1.0, 1.0, 1.0))
    0.5
    """
    x = np.asarray(x, dtype=float)
    out = -np.expm1(_gpd_log_sf(np.maximum(x, 0.0), sigma, xi))
    return np.where(x < 0, 0.0, out)


def gpd_sf(x, sigma, xi):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 1.0, np.exp(_gpd_log_sf(np.maximum(x, 0.0), sigma, xi)))


def gpd_isf(s, sigma, xi):
    """Excess ``x`` with ``gpd_sf(x) = s``."""
    s = np.asarray(s, dtype=float)
    if abs(xi) < _XI_ZERO:
        return -sigma * np.log(s)
    return sigma / xi * np.expm1(-xi * np.log(s))


def gpd_ppf(q, sigma, xi):
    q = np.asarray(q, dtype=float)
    if abs(xi) < _XI_ZERO:
        return -sigma * np.log1p(-q)
    return sigma / xi * np.expm1(-xi * np.log1p(-q))


def gpd_nll(params, excesses):
    """Negative log-likelihood of the GPD at ``params = (sigma, xi)``."""
    sigma, xi = params
    if sigma <= 0:
        return np.inf
    n = excesses.size
    if abs(xi) < _XI_ZERO:
        return n * np.log(sigma) + excesses.sum() / sigma
    z = 1.0 + xi * excesses / sigma
    if np.any(z <= 0):
        return np.inf
    return n * np.log(sigma) + (1.0 + 1.0 / xi) * np.log(z).sum()


class GpdFitResult(NamedTuple):
    sigma: float
    xi: float
    nll: float
    converged: bool


def gpd_fit(excesses, init=None, maxiter=2000) -> GpdFitResult:
    """Maximum-likelihood GPD fit by Nelder-Mead on ``(log sigma, xi)``.

    The shape is confined to ``XI_BOUNDS``. If the simplex search runs out
    of iterations a :class:`ConvergenceWarning` is issued and the best
    point found is returned with ``converged=False``.
    """
    excesses = np.asarray(excesses, dtype=float).ravel()
    if excesses.size == 0:
        raise ValueError("gpd_fit needs at least one excess")
    if np.any(~np.isfinite(excesses)) or np.any(excesses <= 0):
        raise ValueError("GPD excesses must be finite and strictly positive")

    if init is None:
        # method of moments, pulled into the admissible region
        mean, var = excesses.mean(), excesses.var()
        xi0 = 0.5 * (1.0 - mean * mean / var) if var > 0 else 0.0
        xi0 = float(np.clip(xi0, -0.4, 0.9))
        sigma0 = mean * (1.0 - xi0)
        if xi0 < 0:
            sigma0 = max(sigma0, -xi0 * excesses.max() * 1.01)
        init = (sigma0, xi0)
    sigma0, xi0 = init

    def objective(theta):
        return gpd_nll((np.exp(theta[0]), theta[1]), excesses)

    res = minimize(
        objective,
        x0=np.array([np.log(sigma0), float(np.clip(xi0, *XI_BOUNDS))]),
        method="Nelder-Mead",
        bounds=[(None, None), XI_BOUNDS],
        options={"xatol": 1e-9, "fatol": 1e-11, "maxiter": maxiter, "maxfev": 2 * maxiter},
    )
    sigma, xi = float(np.exp(res.x[0])), float(res.x[1])
    nll = float(res.fun)
    converged = bool(res.success and np.isfinite(nll))
    if not converged:
        warnings.warn(
            f"GPD fit did not converge ({res.message}); sigma={sigma:.4g}, xi={xi:.4g} unreliable",
            ConvergenceWarning,
            stacklevel=2,
        )
    return GpdFitResult(sigma, xi, nll, converged)


# ---------------------------------------------------------------------------
# Semi-parametric marginal model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GpdModel:
    """GPD tail above ``threshold`` with ``exceed_prob = Pr(X > threshold)``."""

    threshold: float
    sigma: float
    xi: float
    exceed_prob: float
    converged: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.exceed_prob < 1:
            raise ValueError(f"exceed_prob must lie in (0, 1), got {self.exceed_prob}")

    @property
    def upper_endpoint(self) -> float:
        return self.threshold - self.sigma / self.xi if self.xi < 0 else np.inf

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return self.exceed_prob * gpd_sf(x - self.threshold, self.sigma, self.xi)

    def isf(self, s):
        s = np.asarray(s, dtype=float)
        return self.threshold + gpd_isf(s / self.exceed_prob, self.sigma, self.xi)


@dataclass(frozen=True, eq=False)
class MarginalModel:
    """Empirical rank transform below the threshold, GPD tail above it."""

    gpd: GpdModel
    sorted_sample: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.sorted_sample, dtype=float).ravel())
        if arr.size == 0:
            raise ValueError("marginal model needs a nonempty sample")
        arr.setflags(write=False)
        object.__setattr__(self, "sorted_sample", arr)

    @classmethod
    def fit(cls, data, threshold_prob: float = 0.95) -> "MarginalModel":
        data = np.sort(np.asarray(data, dtype=float).ravel())
        if data.size < 2 or np.any(~np.isfinite(data)):
            raise ValueError("marginal fit needs at least two finite observations")
        if not 0 < threshold_prob < 1:
            raise ValueError("threshold_prob must lie in (0, 1)")
        u = float(np.quantile(data, threshold_prob))
        excesses = data[data > u] - u
        if excesses.size < 2:
            raise ValueError(f"too few exceedances ({excesses.size}) above threshold {u:.4g}")
        fit = gpd_fit(excesses)
        n = data.size
        exceed_prob = 1.0 - np.searchsorted(data, u, side="right") / (n + 1)
        gpd = GpdModel(u, fit.sigma, fit.xi, exceed_prob, fit.converged)
        return cls(gpd, data)

    @property
    def n(self) -> int:
        return self.sorted_sample.size

    def _rank_cdf(self, x):
        return np.searchsorted(self.sorted_sample, x, side="right") / (self.n + 1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        tail = x > self.gpd.threshold
        out = np.where(tail, 1.0 - self.gpd.sf(np.where(tail, x, self.gpd.threshold)), self._rank_cdf(x))
        return np.clip(out, np.finfo(float).tiny, _ONE_MINUS)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        tail = x > self.gpd.threshold
        out = np.where(tail, self.gpd.sf(np.where(tail, x, self.gpd.threshold)), 1.0 - self._rank_cdf(x))
        return np.clip(out, np.finfo(float).tiny, _ONE_MINUS)

    def _empirical_quantile(self, q):
        # knots (i/(n+1), x_(i)); clamped to the sample range outside them
        n = self.n
        knots = np.arange(1, n + 1) / (n + 1)
        return np.interp(q, knots, self.sorted_sample)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q >= 1)):
            raise ValueError("quantile level must lie in [0, 1)")
        return self._from_probs(q, 1.0 - q)

    def isf(self, s):
        """Value exceeded with probability ``s``; precise for small ``s``."""
        s = np.asarray(s, dtype=float)
        if np.any((s <= 0) | (s > 1)):
            raise ValueError("survival level must lie in (0, 1]")
        return self._from_probs(1.0 - s, s)

    def _from_probs(self, cdf, sf):
        tail = sf < self.gpd.exceed_prob
        safe_sf = np.where(tail, sf, self.gpd.exceed_prob)
        return np.where(tail, self.gpd.isf(safe_sf), self._empirical_quantile(cdf))

    def to_dict(self) -> dict:
        g = self.gpd
        return {
            "threshold": float(g.threshold),
            "sigma": float(g.sigma),
            "xi": float(g.xi),
            "exceed_prob": float(g.exceed_prob),
            "converged": bool(g.converged),
            "n": int(self.n),
        }


def fit_margins(sample, threshold_prob: float = 0.95) -> tuple[MarginalModel, MarginalModel]:
    sample = np.asarray(sample, dtype=float)
    return (
        MarginalModel.fit(sample[:, 0], threshold_prob),
        MarginalModel.fit(sample[:, 1], threshold_prob),
    )


# ---------------------------------------------------------------------------
# Margin conventions
# ---------------------------------------------------------------------------

def _check_margin(tag):
    if tag not in MARGINS:
        raise ValueError(f"unknown margin {tag!r}; expected one of {MARGINS}")


def to_probs(values, margin: str, model: MarginalModel | None = None):
    """Return ``(cdf, sf)`` of ``values`` under ``margin``."""
    _check_margin(margin)
    v = np.asarray(values, dtype=float)
    if margin == "native":
        if model is None:
            raise ValueError("native margins need a MarginalModel")
        return model.cdf(v), model.sf(v)
    if margin == "uniform":
        if np.any((v < 0) | (v > 1)):
            raise ValueError("uniform values must lie in [0, 1]")
        return v, 1.0 - v
    if margin == "exponential":
        if np.any(v < 0):
            raise ValueError("exponential values must be nonnegative")
        return -np.expm1(-v), np.exp(-v)
    if margin == "laplace":
        half = 0.5 * np.exp(-np.abs(v))
        return np.where(v < 0, half, 1.0 - half), np.where(v < 0, 1.0 - half, half)
    # frechet
    if np.any(v < 0):
        raise ValueError("Frechet values must be nonnegative")
    with np.errstate(divide="ignore"):
        inv = 1.0 / v
    return np.exp(-inv), -np.expm1(-inv)


def from_probs(cdf, sf, margin: str, model: MarginalModel | None = None):
    """Quantile of ``margin`` given the pair ``(cdf, sf)``; uses whichever is smaller."""
    _check_margin(margin)
    cdf = np.asarray(cdf, dtype=float)
    sf = np.asarray(sf, dtype=float)
    lower = cdf <= sf
    with np.errstate(divide="ignore"):
        if margin == "native":
            if model is None:
                raise ValueError("native margins need a MarginalModel")
            return model._from_probs(cdf, sf)
        if margin == "uniform":
            return np.where(lower, cdf, 1.0 - sf)
        if margin == "exponential":
            return np.where(lower, -np.log1p(-cdf), -np.log(sf))
        if margin == "laplace":
            return np.where(lower, np.log(2.0 * cdf), -np.log(2.0 * sf))
        return np.where(lower, -1.0 / np.log(cdf), -1.0 / np.log1p(-sf))


def convert_margin(values, source: str, target: str, source_model=None, target_model=None):
    """Probability-integral transform from ``source`` margins to ``target`` margins.

    >>> float(convert_margin(0.5, "uniform", "laplace"))
    0.0
    """
    cdf, sf = to_probs(values, source, source_model)
    return from_probs(cdf, sf, target, target_model)


def sample_to_margin(sample, source, target, models=(None, None), target_models=(None, None)):
    """Coordinatewise :func:`convert_margin` for an ``(n, 2)`` array."""
    sample = np.asarray(sample, dtype=float)
    out = np.empty_like(sample)
    for j in range(2):
        out[:, j] = convert_margin(sample[:, j], source, target, models[j], target_models[j])
    return out
