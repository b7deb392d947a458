"""Return-curve containers, property enforcement and ray geometry.

Curves are piecewise linear between consecutive points. On standard
exponential margins an enforced curve runs from ``(0, -log p)`` to
``(-log p, 0)`` with x nondecreasing and y nonincreasing, so every ray of
positive slope leaving the origin meets it exactly once.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .margins import MARGINS

_SEG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ReturnCurve:
    """Ordered points of a p-probability return curve on a stated margin."""

    p: float
    points: np.ndarray
    margin: str = "exponential"
    enforced: bool = False

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if self.margin not in MARGINS:
            raise ValueError(f"unknown margin {self.margin!r}")
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def __len__(self):
        return len(self.points)

    def to_csv(self) -> str:
        return points_to_csv(self.points)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "margin": self.margin,
            "enforced": self.enforced,
            "points": [[float(a), float(b)] for a, b in self.points],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "ReturnCurve":
        return cls(float(d["p"]), np.asarray(d["points"], dtype=float), d["margin"], bool(d["enforced"]))

    @classmethod
    def from_json(cls, text: str) -> "ReturnCurve":
        return cls.from_dict(json.loads(text))


def points_to_csv(points, header=("x", "y")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in np.asarray(points, dtype=float):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def marginal_return_level(p: float) -> float:
    """``-log p``, the (1 - p) quantile of the standard exponential."""
    return float(-np.log(p))


def enforce_properties(curve: ReturnCurve) -> ReturnCurve:
    """Impose the marginal bounds, endpoints and monotone shape of a return curve.

    Coordinates are clamped into ``[0, -log p]``, the endpoints
    ``(0, -log p)`` and ``(-log p, 0)`` are added when absent, points are
    ordered by x (ties by decreasing y), and one sweep from the upper-left
    endpoint replaces each y by the running minimum. The operation is
    idempotent and never increases a coordinate.
    """
    if curve.margin != "exponential":
        raise ValueError("properties are enforced on exponential margins")
    pts = np.asarray(curve.points, dtype=float)
    if pts.size == 0:
        raise ValueError("cannot enforce properties on an empty curve")
    if not np.all(np.isfinite(pts)):
        raise ValueError("curve points must be finite")
    level = marginal_return_level(curve.p)
    pts = np.clip(pts, 0.0, level)
    start = np.array([[0.0, level]])
    end = np.array([[level, 0.0]])
    if not np.all(pts == start, axis=1).any():
        pts = np.vstack([start, pts])
    if not np.all(pts == end, axis=1).any():
        pts = np.vstack([pts, end])
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    pts = pts[order]
    pts[:, 1] = np.minimum.accumulate(pts[:, 1])
    return ReturnCurve(curve.p, pts, "exponential", True)


# ---------------------------------------------------------------------------
# Angles and rays
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AngleGrid:
    m: int
    angles: np.ndarray
    reference: tuple[float, float] = field(default=(0.0, 0.0))

    def __len__(self):
        return self.m


def angle_grid(m: int, reference=(0.0, 0.0)) -> AngleGrid:
    """Angles ``pi (m + 1 - j) / (2 (m + 1))`` for ``j = 1..m``, decreasing."""
    m = int(m)
    if m < 1:
        raise ValueError("angle grid needs m >= 1")
    j = np.arange(1, m + 1)
    angles = np.pi * (m + 1 - j) / (2 * (m + 1))
    angles.setflags(write=False)
    x0, y0 = reference
    return AngleGrid(m, angles, (float(x0), float(y0)))


def reference_point(sample) -> tuple[float, float]:
    """Componentwise minima of a bivariate sample."""
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[0] == 0 or sample.shape[1] != 2:
        raise ValueError("reference point needs a nonempty (n, 2) sample")
    lo = sample.min(axis=0)
    return float(lo[0]), float(lo[1])


def _ray_segment_params(points, thetas, reference):
    """Ray/segment parameters for every (angle, segment) pair.

    Returns ``(lam, tau, ok)`` arrays of shape ``(len(thetas), n_segments)``:
    the intersection is ``reference + lam * (cos, sin)`` and lies at
    fraction ``tau`` along the segment.
    """
    pts = np.asarray(points, dtype=float)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    p0 = pts[:-1]
    e = pts[1:] - p0
    w0 = p0 - np.asarray(reference, dtype=float)
    c = np.cos(thetas)[:, None]
    s = np.sin(thetas)[:, None]
    denom = c * e[:, 1] - s * e[:, 0]
    seg_len = np.hypot(e[:, 0], e[:, 1])
    scale = np.maximum(seg_len, 1.0)
    usable = (seg_len > 0) & (np.abs(denom) > 1e-15 * scale)
    # near-parallel pairs can overflow; they are masked out by ``usable``
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tau = (w0[:, 0] * s - w0[:, 1] * c) / denom
        lam = (w0[:, 0] * e[:, 1] - w0[:, 1] * e[:, 0]) / denom
    ok = usable & (tau >= -_SEG_TOL) & (tau <= 1 + _SEG_TOL) & (lam >= -_SEG_TOL)
    return lam, np.clip(tau, 0.0, 1.0), ok


def intersect_rays(curve: ReturnCurve, thetas, reference=(0.0, 0.0)):
    """Intersections of rays from ``reference`` with a piecewise-linear curve.

    Returns ``(x, y, d)`` arrays, one entry per angle, where ``d`` is the
    Euclidean distance from the reference point. When a ray touches
    several segments (a vertex, or a flat it grazes) the first segment in
    point order wins.
    """
    pts = np.asarray(curve.points if isinstance(curve, ReturnCurve) else curve, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two points to intersect a ray")
    lam, tau, ok = _ray_segment_params(pts, thetas, reference)
    if not np.all(ok.any(axis=1)):
        bad = np.atleast_1d(thetas)[~ok.any(axis=1)]
        raise ValueError(f"ray at angle(s) {bad[:3]} does not cross the curve")
    first = ok.argmax(axis=1)
    rows = np.arange(len(first))
    t = tau[rows, first]
    p0 = pts[first]
    p1 = pts[first + 1]
    xy = p0 + t[:, None] * (p1 - p0)
    x0, y0 = reference
    d = np.hypot(xy[:, 0] - x0, xy[:, 1] - y0)
    return xy[:, 0], xy[:, 1], d


def intersect_ray(curve: ReturnCurve, theta: float, reference=(0.0, 0.0)):
    """Single-angle form of :func:`intersect_rays`; returns ``(x, y, d)``."""
    x, y, d = intersect_rays(curve, [theta], reference)
    return float(x[0]), float(y[0]), float(d[0])


def count_ray_crossings(curve: ReturnCurve, theta: float, reference=(0.0, 0.0), tol=1e-9) -> int:
    """Number of distinct points where the ray meets the curve."""
    pts = np.asarray(curve.points, dtype=float)
    lam, _, ok = _ray_segment_params(pts, [theta], reference)
    hits = np.sort(lam[0, ok[0]])
    if hits.size == 0:
        return 0
    return int(1 + np.sum(np.diff(hits) > tol * max(1.0, hits[-1])))


def points_on_rays(d, thetas, reference=(0.0, 0.0)) -> np.ndarray:
    """Map distances along rays back to ``(x, y)`` coordinates."""
    d = np.asarray(d, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    x0, y0 = reference
    return np.column_stack([x0 + d * np.cos(thetas), y0 + d * np.sin(thetas)])
