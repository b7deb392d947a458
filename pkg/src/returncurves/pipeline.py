"""Curve estimation on arbitrary margins.

Both estimators work on standard exponential margins. :class:`CurveEstimator`
moves a sample there (fitting semi-parametric margins first when the data
are on their native scale), runs the chosen estimator and maps the curve
back.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .angular import wt_curve
from .cond_extremes import HtCurveConfig, ht_curve
from .curves import ReturnCurve
from .margins import MARGINS, fit_margins, sample_to_margin

ESTIMATORS = ("ht", "wt")


@dataclass(frozen=True)
class CurveEstimator:
    """A fully specified curve estimator.

    Instances are plain values, so they can be pickled to worker processes
    and written to run manifests.
    """

    kind: str
    p: float
    margin: str = "exponential"
    marginal_threshold_prob: float = 0.95
    quantile_grid_size: int = 200
    sim_draws: int = 10_000
    ht_threshold_prob: float = 0.95
    num_rays: int = 151
    hill_threshold_prob: float = 0.95
    pstar: float = 0.05

    def __post_init__(self):
        if self.kind not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.kind!r}")
        if self.margin not in MARGINS:
            raise ValueError(f"unknown margin {self.margin!r}")
        if not 0 < self.p < 0.05:
            raise ValueError("p must lie in (0, 0.05): curve estimates extrapolate beyond the 0.95 threshold")
        if self.kind == "ht":
            self.ht_config()
        elif not self.p < self.pstar:
            raise ValueError("p must be smaller than pstar")

    def ht_config(self) -> HtCurveConfig:
        return HtCurveConfig(self.p, self.quantile_grid_size, self.sim_draws, self.ht_threshold_prob)

    def to_dict(self) -> dict:
        return asdict(self)

    def estimate_exponential(self, sample, seed=None) -> ReturnCurve:
        if self.kind == "ht":
            return ht_curve(sample, self.ht_config(), seed)
        return wt_curve(sample, self.p, self.num_rays, self.hill_threshold_prob, self.pstar)

    def __call__(self, sample, seed=None) -> ReturnCurve:
        """Estimate a curve on the margin of ``sample``.

        On ``native`` margins the marginal models are refitted from
        ``sample`` on every call, so bootstrap replicates carry marginal
        uncertainty too.
        """
        sample = np.asarray(sample, dtype=float)
        if self.margin == "exponential":
            return self.estimate_exponential(sample, seed)
        models = (None, None)
        if self.margin == "native":
            models = fit_margins(sample, self.marginal_threshold_prob)
        expo = sample_to_margin(sample, self.margin, "exponential", models=models)
        curve = self.estimate_exponential(expo, seed)
        back = sample_to_margin(curve.points, "exponential", self.margin, target_models=models)
        return ReturnCurve(self.p, back, self.margin, curve.enforced)
