"""Bivariate copulas used as ground truth in simulation studies.

Joint survival probabilities are evaluated through the survival copula
``S(a, b) = Pr(U > 1 - a, V > 1 - b)`` where ``a`` and ``b`` are the
marginal survival probabilities. Working with survival probabilities
directly avoids the cancellation in ``1 - u - v + C(u, v)`` when the
target probability is 1e-4 or smaller.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.integrate import quad_vec
from scipy.stats import rankdata

from .curves import ReturnCurve, marginal_return_level
from .margins import STANDARD_MARGINS, from_probs, to_probs
from .rng import make_rng

FAMILIES = {
    "bev_logistic": ("r",),
    "bev_asym_logistic": ("r", "t1", "t2"),
    "gaussian": ("rho",),
    "inverted_bev_logistic": ("r",),
    "inverted_bev_asym_logistic": ("r", "t1", "t2"),
    "bivariate_t": ("rho", "nu"),
    "frank": ("zeta",),
    "independence": (),
    "comonotone": (),
}

EXCHANGEABLE = {
    "bev_logistic", "gaussian", "inverted_bev_logistic", "bivariate_t",
    "frank", "independence", "comonotone",
}

_BISECT_STEPS = 64


@dataclass(frozen=True)
class CopulaSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown copula family {self.family!r}")
        names = FAMILIES[self.family]
        params = {k: float(v) for k, v in self.params.items()}
        if set(params) != set(names):
            raise ValueError(f"{self.family} takes parameters {names}, got {tuple(params)}")
        r = params.get("r")
        if r is not None and not 0 < r <= 1:
            raise ValueError("dependence parameter r must lie in (0, 1]")
        for t in ("t1", "t2"):
            if t in params and not 0 <= params[t] <= 1:
                raise ValueError(f"asymmetry parameter {t} must lie in [0, 1]")
        if "rho" in params and not -1 < params["rho"] < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if "nu" in params and not params["nu"] > 0:
            raise ValueError("nu must be positive")
        if "zeta" in params and params["zeta"] == 0:
            raise ValueError("Frank parameter zeta must be nonzero")
        object.__setattr__(self, "params", params)

    def __hash__(self):
        return hash((self.family, tuple(sorted(self.params.items()))))

    @property
    def exchangeable(self) -> bool:
        if self.family in ("bev_asym_logistic", "inverted_bev_asym_logistic"):
            return self.params["t1"] == self.params["t2"]
        return self.family in EXCHANGEABLE

    def label(self) -> str:
        if not self.params:
            return self.family
        inner = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.family}({inner})"

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}


# Parameters for the nine study copulas; none are stated in the source
# material, so these are configurable defaults.
STUDY_COPULAS = {
    "bev_logistic": CopulaSpec("bev_logistic", {"r": 0.5}),
    "bev_asym_logistic": CopulaSpec("bev_asym_logistic", {"r": 0.5, "t1": 0.9, "t2": 0.6}),
    "gaussian_1": CopulaSpec("gaussian", {"rho": 0.5}),
    "gaussian_2": CopulaSpec("gaussian", {"rho": 0.9}),
    "inverted_bev_logistic": CopulaSpec("inverted_bev_logistic", {"r": 0.5}),
    "inverted_bev_asym_logistic": CopulaSpec("inverted_bev_asym_logistic", {"r": 0.5, "t1": 0.9, "t2": 0.6}),
    "t_1": CopulaSpec("bivariate_t", {"rho": 0.5, "nu": 5}),
    "t_2": CopulaSpec("bivariate_t", {"rho": 0.8, "nu": 2}),
    "frank": CopulaSpec("frank", {"zeta": -5}),
}


# ---------------------------------------------------------------------------
# Extreme-value (logistic family) building blocks
# ---------------------------------------------------------------------------

def _bev_pieces(params, ex, ey):
    """Exponent measure V and log-sum term for the (asymmetric) logistic.

    ``ex = -log u`` and ``ey = -log v`` so that the Frechet reciprocals are
    ``1/x = ex``. Returns ``(V, a, L)`` with ``a = log(t1 ex)/r`` and
    ``L = log((t1 ex)^(1/r) + (t2 ey)^(1/r))``.
    """
    r = params["r"]
    t1 = params.get("t1", 1.0)
    t2 = params.get("t2", 1.0)
    with np.errstate(divide="ignore"):
        a = np.log(t1 * ex) / r
        b = np.log(t2 * ey) / r
    L = np.logaddexp(a, b)
    V = (1 - t1) * ex + (1 - t2) * ey + np.exp(r * L)
    return V, a, L


def _bev_cdf(params, u, v):
    with np.errstate(divide="ignore"):
        ex, ey = -np.log(u), -np.log(v)
    V, _, _ = _bev_pieces(params, ex, ey)
    return np.exp(-V)


def _bev_hfunc(params, u, v):
    """dC/du for the (asymmetric) logistic extreme-value copula."""
    r = params["r"]
    t1 = params.get("t1", 1.0)
    ex, ey = -np.log(u), -np.log(v)
    V, a, L = _bev_pieces(params, ex, ey)
    with np.errstate(invalid="ignore"):
        frac = np.where(np.isfinite(a), t1 * np.exp((1 - r) * (a - L)), 0.0)
    return np.exp(ex - V) * ((1 - t1) + frac)


def _bev_survival(params, a, b):
    ex, ey = -np.log1p(-a), -np.log1p(-b)
    V, _, _ = _bev_pieces(params, ex, ey)
    return np.maximum(a + b + np.expm1(-V), 0.0)


# ---------------------------------------------------------------------------
# Elliptical survival probabilities
# ---------------------------------------------------------------------------

def _bvn_lower(h, k, rho):
    """Pr(Z1 < h, Z2 < k) for standard normals with correlation ``rho``.

    Owen's T representation; accurate in relative terms deep in the lower
    tail, which is where the survival copula evaluates it.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    h, k = np.broadcast_arrays(h, k)
    tiny = 1e-12
    h = np.where(h == 0, tiny, h)
    k = np.where(k == 0, tiny, k)
    root = np.sqrt(1 - rho * rho)
    ah = (k - rho * h) / (h * root)
    ak = (h - rho * k) / (k * root)
    beta = np.where(h * k > 0, 0.0, 0.5)
    out = 0.5 * (special.ndtr(h) + special.ndtr(k)) - special.owens_t(h, ah) - special.owens_t(k, ak) - beta
    return np.clip(out, 0.0, 1.0)


def _t_logpdf_const(nu):
    return special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * np.log(nu * np.pi)


def _bvt_upper(a, b, rho, nu):
    """Pr(T1 > t_a, T2 > t_b) where ``Pr(T1 > t_a) = a``, ``Pr(T2 > t_b) = b``.

    Conditioning on T1 = s gives a Student-t with ``nu + 1`` degrees of
    freedom, location ``rho s`` and scale ``sqrt((1 - rho^2)(nu + s^2)/(nu + 1))``.
    The outer integral over ``s in [t_a, inf)`` is mapped to ``v in (0, 1]``
    by ``s = t_a + (1 - v) / v``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    ta = -special.stdtrit(nu, a)
    tb = -special.stdtrit(nu, b)
    const = _t_logpdf_const(nu)
    one_minus = 1 - rho * rho

    def integrand(v):
        if v <= 0.0:
            return np.zeros_like(a)
        s = ta + (1.0 - v) / v
        dens = np.exp(const - 0.5 * (nu + 1) * np.log1p(s * s / nu))
        scale = np.sqrt(one_minus * (nu + s * s) / (nu + 1))
        return dens * special.stdtr(nu + 1, -(tb - rho * s) / scale) / (v * v)

    val, _ = quad_vec(integrand, 0.0, 1.0, epsabs=1e-16, epsrel=1e-11, norm="max", limit=400)
    return np.clip(val, 0.0, np.minimum(a, b))


# ---------------------------------------------------------------------------
# Public evaluation
# ---------------------------------------------------------------------------

def survival_copula(spec: CopulaSpec, a, b):
    """``Pr(U > 1 - a, V > 1 - b)`` for marginal survival probabilities a, b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    edge = (a <= 0) | (b <= 0) | (a >= 1) | (b >= 1)
    if np.any(edge):
        # S(a, 1) = a, S(1, b) = b and S vanishes when either argument does
        a, b = np.broadcast_arrays(a, b)
        out = np.where(a >= 1, np.clip(b, 0, 1), np.where(b >= 1, np.clip(a, 0, 1), 0.0))
        inner = ~edge
        if np.any(inner):
            out = out.astype(float)
            out[inner] = survival_copula(spec, a[inner], b[inner])
        return out
    fam, prm = spec.family, spec.params
    if fam == "independence":
        return a * b
    if fam == "comonotone":
        return np.minimum(a, b)
    if fam in ("bev_logistic", "bev_asym_logistic"):
        return _bev_survival(prm, a, b)
    if fam in ("inverted_bev_logistic", "inverted_bev_asym_logistic"):
        return _bev_cdf(prm, a, b)
    if fam == "gaussian":
        return _bvn_lower(special.ndtri(a), special.ndtri(b), prm["rho"])
    if fam == "bivariate_t":
        shape = np.broadcast(a, b).shape
        return _bvt_upper(a, b, prm["rho"], prm["nu"]).reshape(shape)
    if fam == "frank":
        z = prm["zeta"]
        # Frank is radially symmetric, so the survival copula is C itself
        arg = np.expm1(-z * a) * np.expm1(-z * b) / np.expm1(-z)
        return np.clip(-np.log1p(arg) / z, 0.0, np.minimum(a, b))
    raise AssertionError(fam)


def copula_cdf(spec: CopulaSpec, u, v):
    """Copula distribution function ``C(u, v)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if spec.family in ("bev_logistic", "bev_asym_logistic"):
        return _bev_cdf(spec.params, u, v)
    return u + v - 1.0 + survival_copula(spec, 1.0 - u, 1.0 - v)


def joint_survival(spec: CopulaSpec, x, y, margin: str = "exponential"):
    """``Pr(X > x, Y > y)`` for the copula with the given standard margins."""
    if margin not in STANDARD_MARGINS:
        raise ValueError(f"joint survival needs a standard margin, got {margin!r}")
    _, sx = to_probs(x, margin)
    _, sy = to_probs(y, margin)
    return survival_copula(spec, sx, sy)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _frank_hfunc(zeta, u, v):
    num = np.exp(-zeta * u) * np.expm1(-zeta * v)
    den = np.expm1(-zeta) + np.expm1(-zeta * u) * np.expm1(-zeta * v)
    return num / den


def _conditional_inverse(hfunc, u, w):
    """Solve ``hfunc(u, v) = w`` for v in (0, 1) by vectorised bisection."""
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        below = hfunc(u, mid) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _uniform_draws(rng, n):
    eps = 1e-16
    return np.clip(rng.random(n), eps, 1 - eps)


def _sample_probs(spec: CopulaSpec, n: int, rng):
    """Draw ``(cdf_x, sf_x, cdf_y, sf_y)`` arrays from the copula."""
    fam, prm = spec.family, spec.params
    if fam == "independence":
        u, v = rng.random(n), rng.random(n)
        return u, 1 - u, v, 1 - v
    if fam == "comonotone":
        u = rng.random(n)
        return u, 1 - u, u.copy(), 1 - u
    if fam in ("gaussian", "bivariate_t"):
        rho = prm["rho"]
        z1 = rng.standard_normal(n)
        z2 = rho * z1 + np.sqrt(1 - rho * rho) * rng.standard_normal(n)
        if fam == "gaussian":
            return special.ndtr(z1), special.ndtr(-z1), special.ndtr(z2), special.ndtr(-z2)
        nu = prm["nu"]
        scale = np.sqrt(rng.chisquare(nu, n) / nu)
        t1, t2 = z1 / scale, z2 / scale
        return (special.stdtr(nu, t1), special.stdtr(nu, -t1),
                special.stdtr(nu, t2), special.stdtr(nu, -t2))
    u = _uniform_draws(rng, n)
    w = _uniform_draws(rng, n)
    if fam == "frank":
        z = prm["zeta"]
        v = _conditional_inverse(lambda uu, vv: _frank_hfunc(z, uu, vv), u, w)
        return u, 1 - u, v, 1 - v
    v = _conditional_inverse(lambda uu, vv: _bev_hfunc(prm, uu, vv), u, w)
    if fam.startswith("inverted"):
        # survival transform (u, v) -> (1 - u, 1 - v)
        return 1 - u, u, 1 - v, v
    return u, 1 - u, v, 1 - v


def copula_sample(spec: CopulaSpec, n: int, margin: str = "exponential", seed=None) -> np.ndarray:
    """``n`` i.i.d. draws from the copula on standard margins, shape ``(n, 2)``."""
    if margin not in STANDARD_MARGINS:
        raise ValueError(f"copula samples need a standard margin, got {margin!r}")
    n = int(n)
    if n < 1:
        raise ValueError("sample size must be positive")
    rng = make_rng(seed)
    cx, sx, cy, sy = _sample_probs(spec, n, rng)
    return np.column_stack([from_probs(cx, sx, margin), from_probs(cy, sy, margin)])


def chi_u(sample, u: float) -> float:
    """Empirical ``Pr(F_Y(Y) > u | F_X(X) > u)`` on rank-transformed margins."""
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[0] == 0:
        raise ValueError("chi_u needs a nonempty (n, 2) sample")
    n = sample.shape[0]
    fx = rankdata(sample[:, 0], method="max") / (n + 1)
    fy = rankdata(sample[:, 1], method="max") / (n + 1)
    cond = fx > u
    if not cond.any():
        raise ValueError(f"no exceedances of u={u} in the first coordinate")
    return float(np.mean(fy[cond] > u))


# ---------------------------------------------------------------------------
# True return curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrueCurve:
    p: float
    points: np.ndarray
    tolerance: float
    spec: CopulaSpec | None = None

    def as_return_curve(self) -> ReturnCurve:
        return ReturnCurve(self.p, self.points, "exponential", True)


def _solve_upper(f, p, lo, hi, xtol=1e-14, ftol=1e-15, max_iter=200):
    """Root of the nonincreasing map ``f(z, idx) = p`` on ``[lo, hi]``, vectorised.

    ``f`` receives candidate values for the entries ``idx`` of the problem.
    Illinois-modified regula falsi with a bisection step whenever the
    secant stalls. Where ``f(hi) >= p`` already (a flat at level p, as for
    the comonotone copula) the upper end is returned.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    everything = np.arange(lo.size)
    flo = f(lo, everything) - p
    fhi = f(hi, everything) - p
    out = np.where(fhi >= 0, hi, lo)
    active = (fhi < 0) & (flo > 0)
    side = np.zeros_like(lo)
    for it in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        l, h, fl, fh = lo[idx], hi[idx], flo[idx], fhi[idx]
        z = h - fh * (h - l) / (fh - fl)
        stalled = ~((z > l) & (z < h)) | (it % 8 == 7)
        z = np.where(stalled, 0.5 * (l + h), z)
        fz = f(z, idx) - p
        up = fz >= 0
        lo[idx] = np.where(up, z, l)
        flo[idx] = np.where(up, fz, fl)
        hi[idx] = np.where(up, h, z)
        fhi[idx] = np.where(up, fh, fz)
        # Illinois: halve the retained end's value when the same side moves twice
        sd = side[idx]
        flo[idx] = np.where(~up & (sd < 0), flo[idx] * 0.5, flo[idx])
        fhi[idx] = np.where(up & (sd > 0), fhi[idx] * 0.5, fhi[idx])
        side[idx] = np.where(up, 1.0, -1.0)
        out[idx] = z
        conv = (np.abs(fz) <= ftol) | (hi[idx] - lo[idx] <= xtol * np.maximum(1.0, np.abs(z)))
        active[idx[conv]] = False
    return out


def true_return_curve(spec: CopulaSpec, p: float, grid_size: int = 200) -> TrueCurve:
    """Return curve of the copula on exponential margins by root finding.

    For each x on a uniform grid over ``[0, -log p]`` the largest y with
    ``S(x, y) >= p`` is found by bisection; the endpoints
    ``(0, -log p)`` and ``(-log p, 0)`` are always included.
    """
    if not 0 < p < 0.05:
        raise ValueError("true curves are computed for 0 < p < 0.05")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    level = marginal_return_level(p)
    xs = np.linspace(0.0, level, grid_size)
    sx = np.exp(-xs)

    def surv(y, idx):
        return survival_copula(spec, sx[idx], np.exp(-y))

    lo = np.zeros_like(xs)
    hi = np.full_like(xs, level)
    everything = np.arange(xs.size)
    if np.any(surv(lo, everything) < p * (1 - 1e-12)) or np.any(surv(hi, everything) > p * (1 + 1e-12)):
        raise ArithmeticError("return-curve root not bracketed; survival function is inconsistent")
    ys = _solve_upper(surv, p, lo, hi)
    ys[0] = level
    if ys[-1] < 1e-9:
        ys[-1] = 0.0
    pts = np.column_stack([xs, ys])
    if not (pts[-1, 0] == level and pts[-1, 1] == 0.0):
        pts = np.vstack([pts, [level, 0.0]])
    resid = np.abs(survival_copula(spec, np.exp(-pts[:, 0]), np.exp(-pts[:, 1])) - p)
    return TrueCurve(p, pts, float(resid.max()), spec)


def true_ray_norms(spec: CopulaSpec, p: float, thetas, reference=(0.0, 0.0)) -> np.ndarray:
    """Exact distances ``d_theta`` from ``reference`` to the true curve along each ray."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    level = marginal_return_level(p)
    x0, y0 = reference
    c, s = np.cos(thetas), np.sin(thetas)
    # the ray leaves the box [0, level]^2, where S <= p, before this distance
    dmax = np.minimum((level - x0) / c, (level - y0) / s)

    def surv(d, idx):
        return survival_copula(spec, np.exp(-(x0 + d * c[idx])), np.exp(-(y0 + d * s[idx])))

    return _solve_upper(surv, p, np.zeros_like(thetas), dmax)
