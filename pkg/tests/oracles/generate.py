"""Regenerate the frozen Monte-Carlo reference values in ``values.json``.

The sampler here shares no code with the package: logistic extreme-value
pairs come from the positive-stable frailty representation of the Gumbel
copula (Chambers-Mallows-Stuck stable draws), not from conditional
inversion. Run with ``python3 tests/oracles/generate.py``.
"""
import json
from pathlib import Path

import numpy as np

N = 10_000_000
R = 0.5


def positive_stable(alpha, size, rng):
    """Laplace transform exp(-s**alpha) (Kanter / CMS construction)."""
    u = rng.uniform(0, np.pi, size)
    w = rng.standard_exponential(size)
    return (np.sin(alpha * u) / np.sin(u) ** (1 / alpha)) * (np.sin((1 - alpha) * u) / w) ** ((1 - alpha) / alpha)


def gumbel_uniforms(r, n, rng):
    s = positive_stable(r, n, rng)
    e = rng.standard_exponential((n, 2))
    return np.exp(-((e / s[:, None]) ** r))


def chi_true_margins(u_sample, u):
    ex = u_sample[:, 0] > u
    k = ex.sum()
    chi = np.mean(u_sample[ex, 1] > u)
    return float(chi), float(np.sqrt(chi * (1 - chi) / k))


def main():
    rng = np.random.default_rng(np.random.SeedSequence([424242, 1]))
    uv = gumbel_uniforms(R, N, rng)
    out = {}
    for u in (0.99, 0.999):
        chi, se = chi_true_margins(uv, u)
        out[f"logistic_r0.5_chi_{u}"] = {"value": chi, "se": se, "n": N}
    # (-log U, -log V) has the inverted logistic law on exponential margins
    x = -np.log(uv)
    frac = float(np.mean((x[:, 0] > 1) & (x[:, 1] > 1)))
    out["inverted_logistic_r0.5_S_1_1"] = {"value": frac, "se": float(np.sqrt(frac * (1 - frac) / N)), "n": N}
    path = Path(__file__).with_name("values.json")
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
