"""Reference problems with their parameters, certificates and stepsize windows."""

import math
from dataclasses import dataclass

import numpy as np

from .drs import PDCertificate, gamma_range_semi, pd_cert_from_semi
from .operators import (
    CONSTANT_ONE,
    BANDED_PROFILE,
    BreakInterval,
    BreakSet,
    Linear,
    PiecewiseGradient,
    Rotational,
    ScaledIdentity,
    full_domain_gamma_set,
)
from .pppa import MintyCertificate
from .semicalc import SemiParams

__all__ = [
    "toy_operator",
    "toy_certificate",
    "saddle_operators",
    "SplittingProblem",
    "nonsmooth_problem",
    "stationary_problem",
    "stationary_slopes",
    "PROBLEMS",
]


def toy_operator(a=2.0, b=1.0, profile="banded"):
    """Radially modulated rotation; ``profile`` is ``'banded'`` (zero band between radii 0.8 and 1), ``'constant'`` or a profile object."""
    if profile == "banded":
        profile = BANDED_PROFILE
    elif profile == "constant":
        profile = CONSTANT_ONE
    return Rotational(float(a), float(b), profile)


def toy_certificate(a=2.0, b=1.0):
    """``V = b/(a^2+b^2) I`` certifies the origin whenever the profile stays in ``[0, 1]``."""
    return MintyCertificate(b / (a * a + b * b) * np.eye(2), [np.zeros(2)])


def saddle_operators(a=2.0, b=-1.0):
    return Linear(np.array([[0.0, a], [-a, 0.0]])), ScaledIdentity(float(b), 2)


@dataclass(frozen=True, eq=False)
class SplittingProblem:
    """``0 in A x + B x`` with semimonotone parameters and a certified solution."""

    name: str
    A: PiecewiseGradient
    B: PiecewiseGradient
    pA: SemiParams
    pB: SemiParams
    xstar: float
    ystar: float

    @property
    def cert(self):
        return pd_cert_from_semi(self.pA, self.pB, [(self.xstar, self.ystar)])

    def gamma_window(self, exact_domain=True):
        """Certified stepsize window, restricted to stepsizes where both resolvents are everywhere defined."""
        sets = [full_domain_gamma_set(self.A), full_domain_gamma_set(self.B)] if exact_domain else None
        return gamma_range_semi(self.pA, self.pB, enforce_domain=True, domain_sets=sets)


def nonsmooth_problem():
    """Two nonconvex piecewise quadratics with the unique solution ``x* = 0``."""
    A = PiecewiseGradient(
        (-1.0, 1.0),
        (-1.0, 6.0, -1.0),
        (-3.0, -3.0, -3.0),
        (BreakSet((-2.0, -9.0)), BreakSet((-4.0, 3.0))),
    )
    B = PiecewiseGradient(
        (-1.0, 2.0),
        (4.0, 2.0, 2.0),
        (-1.0, 3.0, 15.0),
        (BreakInterval(-5.0, 1.0), BreakInterval(7.0, 19.0)),
    )
    return SplittingProblem("nonsmooth-min", A, B, SemiParams(-1.2, 0.2), SemiParams(1.6, 0.1), 0.0, 3.0)


def stationary_slopes(mu=-0.3, rho=-0.1):
    """Slopes ``(inner, outer)`` of affine maps on the boundary of the (mu, rho) class."""
    root = math.sqrt(1.0 - 4.0 * mu * rho)
    return (1.0 - root) / (2.0 * rho), (1.0 + root) / (2.0 * rho)


def stationary_problem():
    """A problem whose only solution is a stationary point that is not a minimizer."""
    s_in, s_out = stationary_slopes(-0.3, -0.1)
    A = PiecewiseGradient(
        (-3.0, 3.0),
        (s_out, s_in, s_out),
        (-1.0, -1.0, -1.0),
        (BreakSet((-3.0 * s_in - 1.0, -3.0 * s_out - 1.0)), BreakSet((3.0 * s_in - 1.0, 3.0 * s_out - 1.0))),
    )
    B = PiecewiseGradient(
        (-1.0, 1.0),
        (0.5, 2.0, 0.5),
        (1.0, 1.0, 1.0),
        (BreakSet((-1.0, 0.5)), BreakSet((3.0, 1.5))),
    )
    return SplittingProblem("stationary", A, B, SemiParams(-0.3, -0.1), SemiParams(0.4, 0.4), 0.0, 1.0)


PROBLEMS = {
    "nonsmooth-min": nonsmooth_problem,
    "stationary": stationary_problem,
}
