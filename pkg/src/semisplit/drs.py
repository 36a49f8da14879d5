"""Relaxed Douglas-Rachford splitting for ``0 in A x + B x``.

Iteration::

    u in J_{gamma A}(s),   v in J_{gamma B}(2u - s),   s+ = s + lam (v - u)

DRS is the preconditioned proximal point method applied to the primal-dual
operator ``(x, y) -> (A x + y, B^-1 y - x)`` with
``M = [[I/gamma, -I], [-I, gamma I]]``; this module runs it directly, checks the
correspondence, and computes the stepsize windows that make it converge.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import AssumptionViolated, CertificateInfeasible, GammaOutOfRange, KappaViolated, RelaxationWarning
from .operators import PrimalDual, ResolventSelection, Selector, resolvent
from .pppa import FractionOfTwoAlpha, MintyCertificate, Preconditioner, pppa_step
from .semicalc import GammaInterval, SemiParams, neg, parallel_sum, positive_quadratic_range, resolvent_gamma_range

__all__ = [
    "DRSConfig",
    "PDCertificate",
    "DRSTrace",
    "drs_step",
    "run_drs",
    "gamma_range_minty",
    "pd_cert_from_semi",
    "gamma_range_semi",
    "alpha_drs",
    "drs_rate_certificate",
    "equivalence_check",
    "spectral_lambda_bar_toy",
    "spectral_lambda_bar_saddle",
    "ToyPPA",
    "SaddleDRS",
    "spectral_scan",
    "find_crossing",
    "nonmonotonicity_report",
]


@dataclass(frozen=True)
class DRSConfig:
    gamma: float
    lambda_rule: object = field(default_factory=FractionOfTwoAlpha)
    max_iters: int = 1000
    stop_tol: float = 1e-10
    selection: ResolventSelection = field(default_factory=ResolventSelection)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class PDCertificate:
    """Oblique Minty certificate ``V = blkdiag(beta_P I, beta_D I)`` with its primal-dual solutions."""

    beta_P: float
    beta_D: float
    Sstar: tuple = ()

    def __post_init__(self):
        if not neg(self.beta_D) * neg(self.beta_P) < 0.25:
            raise CertificateInfeasible(f"[beta_D]_-[beta_P]_- must be below 1/4 for ({self.beta_P}, {self.beta_D})")
        object.__setattr__(
            self,
            "Sstar",
            tuple((np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))) for x, y in self.Sstar),
        )

    def V(self, n=1):
        return np.diag([self.beta_P] * n + [self.beta_D] * n)

    def sstar(self, gamma):
        """Fixed points ``x* - gamma y*`` of the DRS map."""
        return [x - gamma * y for x, y in self.Sstar]

    def minty(self):
        n = len(self.Sstar[0][0]) if self.Sstar else 1
        return MintyCertificate(self.V(n), [np.concatenate([x, y]) for x, y in self.Sstar])


@dataclass
class DRSTrace:
    s: list = field(default_factory=list)
    u: list = field(default_factory=list)
    v: list = field(default_factory=list)
    ybar: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    fejer_gap: list = field(default_factory=list)
    gamma: float = math.nan
    alpha: float = math.nan
    status: str = "max_iters"
    seed: int = 0

    def __len__(self):
        return len(self.u)

    @property
    def kappa(self):
        return min(l * (2 * self.alpha - l) for l in self.lam) if self.lam else math.inf

    def to_csv(self, path=None):
        n = len(self.s[0])
        cols = lambda name: [f"{name}{i}" for i in range(n)] if n > 1 else [name]
        header = ["k"] + cols("s") + cols("u") + cols("v") + cols("ybar") + ["residual"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for k in range(len(self.u)):
            row = [k]
            for arr in (self.s[k], self.u[k], self.v[k], self.ybar[k]):
                row += [f"{float(c):.17g}" for c in arr]
            row.append(f"{self.residual[k]:.17g}")
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def drs_step(A, B, s, gamma, lam, sel=None):
    """One relaxed DRS step; returns ``(snext, u, v)``."""
    selector = sel if isinstance(sel, Selector) else Selector(sel)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    u, _ = resolvent(A, gamma, s, selector)
    v, _ = resolvent(B, gamma, 2.0 * u - s, selector)
    return s + lam * (v - u), u, v


def gamma_range_minty(beta_P, beta_D):
    """Stepsizes ``gamma > 0`` with ``1 + beta_P/gamma + gamma beta_D > 0``."""
    if not neg(beta_D) * neg(beta_P) < 0.25:
        raise CertificateInfeasible(f"[beta_D]_-[beta_P]_- >= 1/4 for ({beta_P}, {beta_D})")
    return positive_quadratic_range(beta_D, 1.0, beta_P)


def pd_cert_from_semi(pA, pB, Sstar=()):
    """Primal-dual certificate ``(rho_A [] rho_B, mu_A [] mu_B)`` from semimonotone parameters."""
    pA, pB = SemiParams(*pA), SemiParams(*pB)
    if not (pA.mu + pB.mu > 0 or pA.mu == pB.mu == 0):
        raise AssumptionViolated("mu-summable", f"mu_A + mu_B = {pA.mu + pB.mu} must be positive")
    if not (pA.rho + pB.rho > 0 or pA.rho == pB.rho == 0):
        raise AssumptionViolated("rho-summable", f"rho_A + rho_B = {pA.rho + pB.rho} must be positive")
    beta_P = parallel_sum(pA.rho, pB.rho)
    beta_D = parallel_sum(pA.mu, pB.mu)
    if not neg(beta_D) * neg(beta_P) < 0.25:
        raise AssumptionViolated("interaction", f"[beta_D]_-[beta_P]_- = {neg(beta_D) * neg(beta_P)} must be below 1/4")
    return PDCertificate(beta_P, beta_D, Sstar)


def gamma_range_semi(pA, pB, enforce_domain=False, domain_sets=None):
    """Douglas-Rachford stepsize window for a semimonotone pair.

    With ``enforce_domain`` the window is intersected with the full-domain
    ranges of both resolvents. ``domain_sets`` may add exact full-domain sets
    (lists of intervals, e.g. from ``full_domain_gamma_set``); if the result
    splits into several pieces the widest one is returned.
    """
    cert = pd_cert_from_semi(pA, pB)
    out = gamma_range_minty(cert.beta_P, cert.beta_D)
    if enforce_domain:
        for p in (pA, pB):
            out = out.intersect(resolvent_gamma_range(SemiParams(*p)))
    for pieces in domain_sets or ():
        cands = [out.intersect(iv) for iv in pieces]
        cands = [c for c in cands if not c.is_empty]
        out = max(cands, key=lambda c: c.hi - c.lo) if cands else GammaInterval.empty()
    return out


def alpha_drs(gamma, beta_P, beta_D):
    """``1 + beta_P/gamma + gamma beta_D``; the relaxation must stay below twice this."""
    rng = gamma_range_minty(beta_P, beta_D)
    if gamma not in rng:
        raise GammaOutOfRange(f"gamma={gamma} outside {rng}")
    return 1.0 + beta_P / gamma + gamma * beta_D


def run_drs(A, B, cert, s0, cfg):
    """Run relaxed DRS from ``s0``.

    ``cert=None`` runs without a certificate; the relaxation rule must then
    be :class:`~semisplit.pppa.Fixed` and no Fejer gaps are recorded.

    The Fejer gap is measured in the DRS variable:
    ``(|s - s*|^2 - lam (2 alpha - lam) |u - v|^2 - |s+ - s*|^2) / gamma``.
    """
    gamma = cfg.gamma
    if cert is None:
        # uncertified run: only a fixed relaxation makes sense
        alpha, sstars = math.nan, []
    else:
        alpha = alpha_drs(gamma, cert.beta_P, cert.beta_D)
        sstars = cert.sstar(gamma)
    lam = cfg.lambda_rule(alpha)
    if not lam > 0:
        raise ValueError(f"relaxation {lam} is not positive")
    if lam >= 2 * alpha:
        warnings.warn(f"relaxation {lam:.6g} is not below 2*alpha = {2 * alpha:.6g}", RelaxationWarning)
    selector = Selector(cfg.selection)
    trace = DRSTrace(gamma=gamma, alpha=alpha, seed=cfg.selection.seed)
    s = np.atleast_1d(np.asarray(s0, dtype=float)).copy()
    for _ in range(cfg.max_iters):
        snext, u, v = drs_step(A, B, s, gamma, lam, selector)
        res = float(np.linalg.norm(u - v))
        trace.s.append(s)
        trace.u.append(u)
        trace.v.append(v)
        trace.ybar.append((2.0 * u - s - v) / gamma)
        trace.residual.append(res)
        trace.lam.append(lam)
        if sstars:
            dec = lam * (2 * alpha - lam) * res * res
            trace.fejer_gap.append(
                min(float(np.sum((s - st) ** 2) - dec - np.sum((snext - st) ** 2)) for st in sstars) / gamma
            )
        s = snext
        if res <= cfg.stop_tol:
            trace.status = "converged"
            break
    trace.s.append(s)
    return trace


def drs_rate_certificate(trace, cert, kappa=None):
    """``min_k |u - v|^2 <= |s0 - s*|^2 / ((N+1) kappa)``; returns ``(lhs, rhs, holds)``."""
    realized = trace.kappa
    if kappa is None:
        kappa = realized
    elif kappa > realized * (1 + 1e-12):
        raise KappaViolated(f"kappa {kappa:.6g} exceeds the realized minimum {realized:.6g}")
    lhs = min(r * r for r in trace.residual)
    s0 = trace.s[0]
    rhs = min(float(np.sum((s0 - st) ** 2)) for st in cert.sstar(trace.gamma)) / (len(trace.residual) * kappa)
    return lhs, rhs, lhs <= rhs * (1 + 1e-9)


def equivalence_check(A, B, cert, z0, cfg, horizon=100):
    """Run DRS and the primal-dual PPPA in lockstep; return the largest deviation.

    Compares ``s`` with ``x - gamma y``, ``u`` with ``xbar`` and the DRS dual
    estimate ``(2u - s - v)/gamma`` with ``ybar``.
    """
    gamma = cfg.gamma
    n = A.dim
    z = np.asarray(z0, dtype=float).copy()
    s = z[:n] - gamma * z[n:]
    P = Preconditioner.drs(gamma, n)
    if cert is None:
        V, alpha = np.zeros((2 * n, 2 * n)), math.nan
    else:
        V, alpha = cert.V(n), alpha_drs(gamma, cert.beta_P, cert.beta_D)
    lam = cfg.lambda_rule(alpha)
    T = PrimalDual(A, B)
    sel_drs, sel_pd = Selector(cfg.selection), Selector(cfg.selection)
    worst = 0.0
    for _ in range(horizon):
        snext, u, v = drs_step(A, B, s, gamma, lam, sel_drs)
        znext, zbar, _, _, _, _ = pppa_step(T, P, V, z, lambda _a: lam, sel_pd)
        xbar, ybar = zbar[:n], zbar[n:]
        dev = max(
            float(np.linalg.norm(s - (z[:n] - gamma * z[n:]))),
            float(np.linalg.norm(u - xbar)),
            float(np.linalg.norm((2 * u - s - v) / gamma - ybar)),
        )
        worst = max(worst, dev)
        s, z = snext, znext
    return worst


# -- spectral tightness on the linear examples ---------------------------------------


def spectral_lambda_bar_toy(a, b):
    """Largest relaxation for which the linear rotation example converges."""
    if not b > 0:
        raise ValueError("need b > 0")
    return 2.0 * (1.0 + b / (a * a + b * b))


def spectral_lambda_bar_saddle(a, b, gamma):
    """Relaxation threshold for DRS on the bilinear saddle example, or ``None`` if no relaxation works."""
    if a == 0 or b == 0 or not gamma > 0:
        raise ValueError("need a, b nonzero and gamma positive")
    val = 2.0 * (a * a * gamma + b) * (1.0 + gamma * b) / (gamma * (a * a + b * b))
    if b < 0 and (a * a == b * b or not min(-1 / b, -b / (a * a)) < gamma < max(-1 / b, -b / (a * a))):
        return None
    return val if val > 0 else None


@dataclass(frozen=True)
class ToyPPA:
    """Proximal point map ``I + lam((I + T)^-1 - I)`` with ``T = [[b, a], [-a, b]]``."""

    a: float
    b: float

    def matrix(self, lam):
        T = np.array([[self.b, self.a], [-self.a, self.b]])
        I = np.eye(2)
        return I + lam * (np.linalg.inv(I + T) - I)


@dataclass(frozen=True)
class SaddleDRS:
    """DRS map ``I + lam(Hhat - Hbar)`` for ``A = [[0, a], [-a, 0]]``, ``B = b I``."""

    a: float
    b: float
    gamma: float

    def matrix(self, lam):
        I = np.eye(2)
        A = np.array([[0.0, self.a], [-self.a, 0.0]])
        Hbar = np.linalg.inv(I + self.gamma * A)
        Hhat = np.linalg.inv(I + self.gamma * self.b * I) @ (2 * Hbar - I)
        return I + lam * (Hhat - Hbar)


def spectral_scan(builder, lambda_grid):
    """``[(lam, spectral radius of builder.matrix(lam)), ...]``."""
    return [(float(l), linalg.spectral_radius(builder.matrix(l))) for l in lambda_grid]


def find_crossing(builder, lo, hi, tol=1e-12):
    """Bisection for the relaxation at which the spectral radius reaches one.

    Requires radius < 1 at ``lo`` and >= 1 at ``hi``.
    """
    rad = lambda l: linalg.spectral_radius(builder.matrix(l)) - 1.0
    if not (rad(lo) < 0 <= rad(hi)):
        raise ValueError(f"no sign change of rho(H) - 1 on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rad(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def nonmonotonicity_report(a, b):
    """Traces of the symmetric parts of the primal, dual and primal-dual operators
    for ``A = [[0, a], [-a, 0]]``, ``B = b I``."""
    A = np.array([[0.0, a], [-a, 0.0]])
    B = b * np.eye(2)
    Ainv, Binv = np.linalg.inv(A), np.linalg.inv(B)
    sym_tr = lambda X: float(np.trace(0.5 * (X + X.T)))
    I = np.eye(2)
    T_P = A + B
    T_D = Ainv + Binv  # y -> -A^-1(-y) + B^-1 y
    T_PD = np.block([[A, I], [-I, Binv]])
    return sym_tr(T_P), sym_tr(T_D), sym_tr(T_PD)
