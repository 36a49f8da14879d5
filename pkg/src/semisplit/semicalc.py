"""Algebra of semimonotonicity parameters.

An operator ``A`` is (mu, rho)-semimonotone when every pair of graph points
satisfies ``<x - x', y - y'> >= mu |x - x'|^2 + rho |y - y'|^2``. This module
collects the scalar rules that propagate such pairs through inversion, sums,
parallel sums, identity shifts and resolvents, plus the stepsize windows
that follow from them. Extended reals are plain floats with ``math.inf``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchPreconditionViolated,
    DegenerateClass,
    GammaOutOfRange,
    HypothesisViolated,
    InteractionDominanceViolated,
    InvalidC,
    NotSummable,
    RuleInapplicable,
)
from .linalg import sym_eigen

__all__ = [
    "TOL",
    "pos",
    "neg",
    "recip",
    "SemiParams",
    "GammaInterval",
    "ExistenceClass",
    "ShiftKind",
    "parallel_sum",
    "positive_quadratic_range",
    "existence_class",
    "inverse_params",
    "sum_params",
    "parallel_sum_params",
    "shift_identity_params",
    "monotone_embedding",
    "resolvent_gamma_range",
    "resolvent_lipschitz",
    "curvature_params",
    "pointwise_min_params",
    "infconv_params",
    "saddle_params",
    "linear_semimono_check",
    "semimonotone_slack",
]

TOL = 1e-12


def pos(x):
    """Positive part ``max(x, 0)``."""
    return max(x, 0.0)


def neg(x):
    """Negative part ``max(-x, 0)``."""
    return max(-x, 0.0)


def recip(x):
    """``1/x`` with ``1/0 = +inf``."""
    return math.inf if x == 0 else 1.0 / x


def _safe_div(num, den):
    # nonnegative numerator over nonnegative denominator, 0 denominator -> +inf
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


@dataclass(frozen=True)
class SemiParams:
    """A (mu, rho) semimonotonicity pair."""

    mu: float
    rho: float

    def __iter__(self):
        return iter((self.mu, self.rho))

    @property
    def feasible(self):
        return not pos(self.mu) * pos(self.rho) > 0.25 + TOL

    @property
    def degenerate(self):
        return abs(pos(self.mu) * pos(self.rho) - 0.25) <= TOL

    @property
    def vacuous(self):
        return neg(self.mu) * neg(self.rho) >= 0.25 - TOL

    def close_to(self, other, tol=1e-12):
        return abs(self.mu - other.mu) <= tol and abs(self.rho - other.rho) <= tol


@dataclass(frozen=True)
class GammaInterval:
    """Open interval ``(lo, hi)`` of admissible stepsizes; ``hi`` may be ``inf``.

    ``lo >= hi`` encodes the empty interval.
    """

    lo: float
    hi: float

    def __post_init__(self):
        # normalize -0.0 so endpoints print and compare cleanly
        object.__setattr__(self, "lo", float(self.lo) + 0.0)
        object.__setattr__(self, "hi", float(self.hi) + 0.0)

    @classmethod
    def empty(cls):
        return cls(0.0, 0.0)

    @property
    def is_empty(self):
        return not self.lo < self.hi

    def __contains__(self, gamma):
        return self.lo < gamma < self.hi

    def intersect(self, other):
        return GammaInterval(max(self.lo, other.lo), min(self.hi, other.hi))

    def __str__(self):
        if self.is_empty:
            return "(empty)"
        hi = "inf" if math.isinf(self.hi) else f"{self.hi:.12g}"
        return f"({self.lo:.12g}, {hi})"


class ExistenceClass(enum.Enum):
    ALL_OPERATORS = "AllOperators"
    NO_OPERATOR = "NoOperator"
    AFFINE_ONLY = "AffineOnly"
    GENERIC = "Generic"


class ShiftKind(enum.Enum):
    EXACT = "Exact"
    ONE_WAY = "OneWay"


def parallel_sum(a, b):
    """Parallel sum ``ab/(a+b)`` of extended reals.

    ``a`` if ``b`` is infinite, ``b`` if ``a`` is, ``0`` if both vanish.
    """
    if math.isinf(b):
        return a
    if math.isinf(a):
        return b
    if a == 0 and b == 0:
        return 0.0
    if a + b == 0:
        raise NotSummable(f"{a} and {b} are not parallel summable")
    return a * b / (a + b)


def positive_quadratic_range(a, b, c):
    """All ``gamma > 0`` with ``a gamma^2 + b gamma + c > 0``, as an open interval.

    Requires ``b > -2 sqrt(ac)`` whenever ``ac >= 0``.
    """
    if a * c >= 0 and not b > -2.0 * math.sqrt(a * c):
        raise HypothesisViolated(f"b={b} must exceed -2*sqrt(ac)={-2.0 * math.sqrt(a * c)}")
    if a < 0 and c < 0 and not b > 2.0 * math.sqrt(a * c):
        return GammaInterval.empty()
    if a >= 0 and c >= 0 and b * b < 4.0 * a * c:
        # no real roots: positive everywhere
        return GammaInterval(0.0, math.inf)
    sq = math.sqrt(b * b - 4.0 * a * c)
    # b + sqrt(disc), in conjugate form when b < 0 to avoid cancellation
    root = b + sq if b >= 0 else -4.0 * a * c / (sq - b)
    return GammaInterval(_safe_div(2.0 * pos(-c), root), _safe_div(root, 2.0 * pos(-a)))


def existence_class(p):
    if neg(p.mu) * neg(p.rho) >= 0.25 - TOL:
        return ExistenceClass.ALL_OPERATORS
    prod = pos(p.mu) * pos(p.rho)
    if prod > 0.25 + TOL:
        return ExistenceClass.NO_OPERATOR
    if abs(prod - 0.25) <= TOL:
        return ExistenceClass.AFFINE_ONLY
    return ExistenceClass.GENERIC


def inverse_params(p):
    return SemiParams(p.rho, p.mu)


def _summable(a, b):
    return a + b > 0 or (a == 0 and b == 0)


def sum_params(pA, pB):
    """Parameters of ``A + B``."""
    if not _summable(pA.rho, pB.rho):
        raise RuleInapplicable("sum rule needs rho_A + rho_B > 0 or rho_A = rho_B = 0")
    return SemiParams(pA.mu + pB.mu, parallel_sum(pA.rho, pB.rho))


def parallel_sum_params(pA, pB):
    """Parameters of the parallel sum ``(A^-1 + B^-1)^-1``."""
    if not _summable(pA.mu, pB.mu):
        raise RuleInapplicable("parallel-sum rule needs mu_A + mu_B > 0 or mu_A = mu_B = 0")
    return SemiParams(parallel_sum(pA.mu, pB.mu), pA.rho + pB.rho)


def shift_identity_params(p, alpha, c=None):
    """Parameters of ``A + alpha*I`` and whether the rule is an equivalence.

    When ``1 + 2 rho alpha <= 0`` only a one-way rule exists and it needs a
    constant ``c > -rho``; ``c`` defaults to ``1 - rho``.
    """
    mu, rho = p
    denom = 1.0 + 2.0 * rho * alpha
    if denom > 0:
        return SemiParams((mu + alpha * (1.0 + rho * alpha)) / denom, rho / denom), ShiftKind.EXACT
    if c is None:
        c = 1.0 - rho
    if not c > -rho:
        raise InvalidC(f"c={c} must exceed -rho={-rho}")
    return SemiParams(mu + alpha * (1.0 - c * alpha), parallel_sum(rho, c)), ShiftKind.ONE_WAY


def monotone_embedding(p):
    """Shifts ``(xi, nu)`` such that ``(T - nu I)^-1 - xi I`` is monotone."""
    mu, rho = p
    if not mu * rho < 0.25:
        raise DegenerateClass(f"mu*rho = {mu * rho} must be below 1/4")
    root = math.sqrt(1.0 - 4.0 * mu * rho)
    return rho / root, 2.0 * mu / (1.0 + root)


def _resolvent_precondition(p):
    if not (p.mu * p.rho < 0.25 or abs(pos(p.mu) * pos(p.rho) - 0.25) <= TOL):
        raise DegenerateClass(f"resolvent rule needs mu*rho < 1/4, got {p.mu * p.rho}")


def resolvent_gamma_range(p):
    """Stepsizes for which the resolvent of a maximal (mu, rho) operator has full domain."""
    _resolvent_precondition(p)
    root = 1.0 + math.sqrt(max(1.0 - 4.0 * p.rho * p.mu, 0.0))
    return GammaInterval(_safe_div(2.0 * pos(-p.rho), root), _safe_div(root, 2.0 * pos(-p.mu)))


def resolvent_lipschitz(p, gamma):
    """Lipschitz modulus of ``J_{gamma A}`` for a (mu, rho)-semimonotone ``A``."""
    if gamma not in resolvent_gamma_range(p):
        raise GammaOutOfRange(f"gamma={gamma} outside {resolvent_gamma_range(p)}")
    mu, rho = p
    num = abs(1.0 + 2.0 * rho / gamma) + math.sqrt(max(1.0 - 4.0 * mu * rho, 0.0))
    return num / (2.0 * (1.0 + mu * gamma + rho / gamma))


def curvature_params(sigma=None, ell=None, alpha=None, c=None):
    """Parameters of the subdifferential of a function with lower curvature
    ``sigma`` and/or upper curvature ``ell``.

    Branches that need free constants take ``alpha`` and ``c``; ``c``
    defaults to its strict lower bound plus one.
    """
    if sigma is None and ell is None:
        raise BranchPreconditionViolated("at least one of sigma, ell is required")
    if ell is None:
        return SemiParams(sigma, 0.0)
    if sigma is None:
        if ell < 0:
            return SemiParams(0.0, 1.0 / ell)
        if alpha is None or not alpha > ell:
            raise BranchPreconditionViolated(f"alpha > ell = {ell} is required")
        bound = 1.0 / (alpha - ell)
        if c is None:
            c = bound + 1.0
        if not c > bound:
            raise BranchPreconditionViolated(f"c > 1/(alpha - ell) = {bound} is required")
        # one-way shift of the (0, 1/(ell - alpha)) operator d(f - alpha/2 |.|^2) by alpha I
        return SemiParams(alpha * (1.0 - c * alpha), parallel_sum(c, 1.0 / (ell - alpha)))
    if sigma > ell:
        raise BranchPreconditionViolated(f"sigma={sigma} cannot exceed ell={ell}")
    if ell + sigma > 0:
        return SemiParams(parallel_sum(sigma, ell), 1.0 / (ell + sigma))
    gap = ell - sigma
    if c is None:
        c = 1.0 - 1.0 / gap if gap > 0 else 1.0
    if not 1.0 + c * gap > 0:
        raise BranchPreconditionViolated(f"1 + c(ell - sigma) > 0 fails for c={c}")
    return SemiParams(sigma * (1.0 - c * sigma), parallel_sum(c, recip(gap)))


def pointwise_min_params(ell_list, alpha=None, c=None):
    """Parameters of the subdifferential of ``min_i f_i`` with upper curvatures ``ell_list``."""
    ell_max = max(ell_list)
    if ell_max < 0:
        return SemiParams(0.0, 1.0 / ell_max)
    if alpha is None or not alpha > ell_max:
        raise BranchPreconditionViolated(f"alpha > max ell = {ell_max} is required")
    bound = 1.0 / (alpha - ell_max)
    if c is None:
        c = bound + 1.0
    if not c > bound:
        raise BranchPreconditionViolated(f"c > 1/(alpha - ell_max) = {bound} is required")
    return SemiParams(alpha * (1.0 - c * alpha), parallel_sum(c, 1.0 / (ell_max - alpha)))


def infconv_params(p1, p2):
    """Parameters of the subdifferential of an infimal convolution.

    Uniform level-boundedness of the pair is the caller's responsibility.
    """
    return parallel_sum_params(p1, p2)


def saddle_params(alpha, delta):
    """Parameters of a saddle operator under alpha-interaction dominance.

    Returns the admissible pair with the larger ``mu``.
    """
    if not delta > 0:
        raise InteractionDominanceViolated(f"delta={delta} must be positive")
    if not alpha > -1.0 / delta:
        raise InteractionDominanceViolated(f"alpha={alpha} must exceed -1/delta={-1.0 / delta}")
    if alpha < 1.0 / delta:
        d = 1.0 - alpha * delta
        return SemiParams(alpha / d, -delta / d)
    return SemiParams(0.0, -delta)


def linear_semimono_check(A, p, tol=1e-10):
    """True iff the matrix ``A`` is (mu, rho)-semimonotone."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    K = 0.5 * (A + A.T) - p.rho * A.T @ A - p.mu * np.eye(A.shape[0])
    w, _ = sym_eigen(K)
    return bool(w[0] >= -tol)


def semimonotone_slack(x, y, x0, y0, p):
    """``<x - x0, y - y0> - mu |x - x0|^2 - rho |y - y0|^2`` for one pair of graph points."""
    dx = np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(x0, dtype=float))
    dy = np.atleast_1d(np.asarray(y, dtype=float) - np.asarray(y0, dtype=float))
    return float(dx @ dy - p.mu * (dx @ dx) - p.rho * (dy @ dy))
