"""Random operators with known semimonotonicity parameters, for property tests."""

import math

import numpy as np

from semisplit.errors import OutOfDomain
from semisplit.operators import BreakInterval, BreakSet, PiecewiseGradient, Shifted
from semisplit.semicalc import SemiParams, monotone_embedding, semimonotone_slack


def random_params(rng, bound=1.0, margin=0.02):
    while True:
        mu, rho = rng.uniform(-bound, bound, 2)
        if mu * rho < 0.25 - margin:
            return SemiParams(float(mu), float(rho))


def random_monotone_base(rng, n_breaks=None):
    """Maximal monotone piecewise affine map on the line with upward jumps."""
    n_breaks = rng.integers(1, 4) if n_breaks is None else n_breaks
    bps = np.sort(rng.uniform(-2, 2, n_breaks))
    slopes = rng.uniform(0, 3, n_breaks + 1)
    intercepts = [rng.uniform(-1, 1)]
    values = []
    for i, p in enumerate(bps):
        left = slopes[i] * p + intercepts[i]
        right = left + rng.choice([0.0, rng.uniform(0, 2)])
        intercepts.append(right - slopes[i + 1] * p)
        values.append(BreakInterval(left, right) if right > left else BreakSet((left,)))
    return PiecewiseGradient(tuple(bps), tuple(slopes), tuple(intercepts), tuple(values))


def certified_operator(rng, p):
    """``(base + xi I)^-1 + nu I`` with a monotone base: exactly (mu, rho)-semimonotone."""
    xi, nu = monotone_embedding(p)
    while True:
        base = random_monotone_base(rng)
        if all(abs(xi + m) > 1e-3 for m in base.slopes):
            return Shifted(base, xi, nu)


def graph_values(T, x):
    try:
        return [v for v in T.evaluate(np.atleast_1d(x)).points]
    except OutOfDomain:
        return []


def min_slack(pairs, p, rng, n_pairs=1000):
    """Smallest relative semimonotone slack over random pairs of graph points."""
    worst = math.inf
    idx = rng.integers(len(pairs), size=(n_pairs, 2))
    for i, j in idx:
        (x, y), (x0, y0) = pairs[i], pairs[j]
        s = semimonotone_slack(x, y, x0, y0, p)
        scale = max(1.0, float(np.sum((x - x0) ** 2) + np.sum((y - y0) ** 2)))
        worst = min(worst, s / scale)
    return worst
