import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from returncurves.curves import ReturnCurve


def check_enforced(curve: ReturnCurve):
    level = -np.log(curve.p)
    pts = curve.points
    assert tuple(pts[0]) == (0.0, level)
    assert tuple(pts[-1]) == (level, 0.0)
    assert np.all(pts >= 0) and np.all(pts <= level)
    assert np.all(np.diff(pts[:, 0]) >= 0)
    assert np.all(np.diff(pts[:, 1]) <= 0)


def random_curve_strategy(max_points=40):
    """Arbitrary (unordered, partly out-of-range) point clouds on exponential margins."""
    return st.tuples(
        st.sampled_from([1e-2, 1e-3, 1e-4, np.exp(-4.0)]),
        arrays(
            np.float64,
            st.tuples(st.integers(1, max_points), st.just(2)),
            elements=st.floats(-2.0, 14.0, allow_nan=False),
        ),
    )
