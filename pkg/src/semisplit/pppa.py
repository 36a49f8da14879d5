"""Relaxed preconditioned proximal point method with semidefinite preconditioners.

Iteration::

    xbar in (M + T)^-1 M x,      x+ = x + lam * (xbar - x)

``M`` is symmetric positive semidefinite. Convergence is driven by an oblique
weak Minty certificate ``V``: ``<v, u - x*> >= <v, V v>`` on the graph of ``T``.
The relaxation may go up to ``2 * alpha_k`` with
``alpha_k = 1 + <vbar, V vbar> / <x - xbar, vbar>`` and ``vbar = M (x - xbar)``.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    CertificateInfeasible,
    InsufficientData,
    KappaViolated,
    RelaxationWarning,
    ZeroDetected,
)
from .operators import (
    Linear,
    PrimalDual,
    ResolventSelection,
    Selector,
    primal_dual_preconditioned_resolvent,
    resolvent,
)

__all__ = [
    "Preconditioner",
    "MintyCertificate",
    "Fixed",
    "FractionOfTwoAlpha",
    "PPPAConfig",
    "IterateTrace",
    "eta_min",
    "alpha_k",
    "preconditioned_resolvent",
    "pppa_step",
    "run_pppa",
    "validate_certificate",
    "halfspace_diagnostics",
    "fejer_gap",
    "rate_certificate",
    "rlinear_fit",
]


@dataclass(frozen=True, eq=False)
class Preconditioner:
    """PSD matrix ``M`` with range basis ``Z``, projector ``Pi`` and ``Q = M + I - Pi``.

    ``gamma`` is set for the Douglas-Rachford preconditioner so that the
    primal-dual resolvent can be evaluated in closed form.
    """

    M: np.ndarray
    Z: np.ndarray
    Pi: np.ndarray
    Q: np.ndarray
    gamma: float = None

    @classmethod
    def from_matrix(cls, M, rank_tol=1e-10, gamma=None):
        M = linalg.symmetrize(M)
        Z = linalg.range_basis(M, rank_tol)
        return cls(M, Z, linalg.projector(Z), linalg.derived_Q(M, Z), gamma)

    @classmethod
    def identity(cls, n):
        return cls.from_matrix(np.eye(n))

    @classmethod
    def drs(cls, gamma, n=1):
        """``[[I/gamma, -I], [-I, gamma I]]``, rank ``n``."""
        I = np.eye(n)
        M = np.block([[I / gamma, -I], [-I, gamma * I]])
        return cls.from_matrix(M, gamma=gamma)

    @property
    def dim(self):
        return self.M.shape[0]

    @property
    def norm(self):
        return float(linalg.sym_eigen(self.M)[0][-1])


@dataclass(frozen=True, eq=False)
class MintyCertificate:
    """Symmetric ``V`` and the solutions ``Sstar`` it certifies."""

    V: np.ndarray
    Sstar: tuple

    def __post_init__(self):
        object.__setattr__(self, "V", linalg.symmetrize(self.V))
        object.__setattr__(self, "Sstar", tuple(np.atleast_1d(np.asarray(s, dtype=float)) for s in self.Sstar))


@dataclass(frozen=True)
class Fixed:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"relaxation must be positive, got {self.value}")

    def __call__(self, alpha):
        return self.value


@dataclass(frozen=True)
class FractionOfTwoAlpha:
    theta: float = 0.45

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")

    def __call__(self, alpha):
        return 2.0 * self.theta * alpha


@dataclass(frozen=True)
class PPPAConfig:
    lambda_rule: object = field(default_factory=FractionOfTwoAlpha)
    max_iters: int = 1000
    stop_tol: float = 1e-10
    selection: ResolventSelection = field(default_factory=ResolventSelection)
    divergence_norm: float = math.inf
    diagnostics: bool = True


@dataclass
class IterateTrace:
    """Per-iteration record of a PPPA run."""

    x: list = field(default_factory=list)
    xbar: list = field(default_factory=list)
    vbar_norm: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    fejer_gap: list = field(default_factory=list)
    shadow_res: list = field(default_factory=list)
    status: str = "max_iters"
    relaxation_violations: int = 0
    seed: int = 0

    def __len__(self):
        return len(self.xbar)

    @property
    def x0(self):
        return self.x[0]

    @property
    def kappa(self):
        """Realized ``min_k lam_k (2 alpha_k - lam_k)``."""
        return min(l * (2 * a - l) for l, a in zip(self.lam, self.alpha)) if self.lam else math.inf

    def to_csv(self, path=None):
        n = len(self.x[0])
        header = ["k"] + [f"x{i}" for i in range(n)] + [f"xbar{i}" for i in range(n)]
        header += ["vbar_norm", "alpha", "lambda", "fejer_gap", "shadow_res"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for k in range(len(self.xbar)):
            row = [k] + [_fmt(v) for v in self.x[k]] + [_fmt(v) for v in self.xbar[k]]
            row += [_fmt(self.vbar_norm[k])]
            row += [_fmt(self.alpha[k]) if k < len(self.alpha) else ""]
            row += [_fmt(self.lam[k]) if k < len(self.lam) else ""]
            row += [_fmt(self.fejer_gap[k]) if k < len(self.fejer_gap) else ""]
            row += [_fmt(self.shadow_res[k])]
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v):
    return f"{float(v):.17g}"


def eta_min(P, V):
    """``1 + lambda_min(X^1/2 Z^T V Z X^1/2)`` with ``X = Z^T Q Z``."""
    Z = P.Z
    if Z.shape[1] == 0:
        return 1.0
    Xh = linalg.sym_sqrt(Z.T @ P.Q @ Z)
    return 1.0 + linalg.sym_eigen(Xh @ Z.T @ np.asarray(V) @ Z @ Xh)[0][0]


def alpha_k(P, V, x, xbar):
    d = np.asarray(x) - np.asarray(xbar)
    vbar = P.M @ d
    den = float(d @ vbar)
    if den <= 0.0:
        raise ZeroDetected("M-seminorm of x - xbar vanishes")
    return 1.0 + float(vbar @ (np.asarray(V) @ vbar)) / den


def preconditioned_resolvent(T, P, x, sel=None):
    """``xbar in (M + T)^-1 M x`` for the supported (T, M) combinations."""
    selector = sel if isinstance(sel, Selector) else Selector(sel)
    x = np.asarray(x, dtype=float)
    if isinstance(T, PrimalDual) and P.gamma is not None:
        return primal_dual_preconditioned_resolvent(T.A, T.B, P.gamma, x, selector)
    c = P.M[0, 0]
    if c > 0 and np.array_equal(P.M, c * np.eye(P.dim)):
        return resolvent(T, 1.0 / c, x, selector)[0]
    if isinstance(T, Linear):
        return np.linalg.lstsq(P.M + T.matrix, P.M @ x, rcond=None)[0]
    raise NotImplementedError(f"no preconditioned resolvent for {type(T).__name__} with this M")


def pppa_step(T, P, V, x, lambda_rule, sel=None, stop_tol=0.0):
    """One relaxed step.

    Returns ``(xnext, xbar, vbar, alpha, lam, status)`` where ``status`` is
    ``'zero'`` if ``x - xbar`` has M-seminorm at most ``stop_tol`` (then
    ``xbar`` is a zero and ``xnext = x``), else ``'ok'``.
    """
    x = np.asarray(x, dtype=float)
    xbar = preconditioned_resolvent(T, P, x, sel)
    d = x - xbar
    vbar = P.M @ d
    seminorm = float(d @ vbar)
    if seminorm <= stop_tol * stop_tol:
        return x.copy(), xbar, vbar, math.nan, math.nan, "zero"
    alpha = 1.0 + float(vbar @ (np.asarray(V) @ vbar)) / seminorm
    lam = lambda_rule(alpha)
    return x + lam * (xbar - x), xbar, vbar, alpha, lam, "ok"


def validate_certificate(T, cert, rng=None, samples=1000, tol=1e-9):
    """Smallest sampled slack of ``<v, u - x*> - <v, V v>`` over graph pairs.

    Raises :class:`CertificateInfeasible` when any slack drops below ``-tol``
    (scaled by the magnitude of the terms).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    worst = math.inf
    for u, v in T.sample_graph(rng, samples):
        quad = float(v @ (cert.V @ v))
        for xs in cert.Sstar:
            lin = float(v @ (u - xs))
            slack = lin - quad
            if slack < -tol * max(1.0, abs(lin), abs(quad)):
                raise CertificateInfeasible(f"Minty inequality fails at u={u.tolist()} (slack {slack:.3e})")
            worst = min(worst, slack)
    return worst


def _qnorm2(P, w):
    return float(w @ (P.Q @ w))


def fejer_gap(P, cert, w_prev, w_next, wbar, lam, alpha):
    """Minimum over ``w* = Pi x*`` of the one-step Fejer decrease slack."""
    w_prev, w_next, wbar = (np.asarray(v, dtype=float) for v in (w_prev, w_next, wbar))
    step = lam * (2 * alpha - lam) * _qnorm2(P, w_prev - wbar)
    gaps = []
    for xs in cert.Sstar:
        ws = P.Pi @ xs
        gaps.append(_qnorm2(P, w_prev - ws) - step - _qnorm2(P, w_next - ws))
    return min(gaps)


def halfspace_diagnostics(P, V, cert, x, xbar, xnext, lam):
    """Check the separating-halfspace picture of one step.

    Returns a dict with ``membership`` (smallest slack of ``Pi x*`` in the
    halfspace), ``alpha_halfspace`` and ``alpha_step`` (the projection
    coefficient from the halfspace geometry and from :func:`alpha_k`), and
    ``update_error`` (distance of ``Pi xnext`` to the relaxed projection).
    """
    V = np.asarray(V)
    w, wbar, wnext = P.Pi @ x, P.Pi @ xbar, P.Pi @ xnext
    g = P.Q @ (w - wbar)
    offset = float(g @ (V @ g))
    membership = min(float((w - wbar) @ (P.Q @ (wbar - P.Pi @ xs))) - offset for xs in cert.Sstar)
    dist2 = _qnorm2(P, w - wbar)
    alpha_h = (dist2 + offset) / dist2
    proj = w + alpha_h * (wbar - w)
    target = (1 - lam / alpha_h) * w + (lam / alpha_h) * proj
    return {
        "membership": membership,
        "alpha_halfspace": alpha_h,
        "alpha_step": alpha_k(P, V, x, xbar),
        "update_error": float(np.linalg.norm(wnext - target)),
    }


def run_pppa(T, P, V, cert, x0, cfg=None, validate=True, rng=None):
    """Run the relaxed PPPA from ``x0`` and record diagnostics.

    Refuses to start when ``eta_min(P, V) <= 0`` or, with ``validate``, when
    sampled graph pairs contradict the certificate.
    """
    cfg = cfg or PPPAConfig()
    V = np.asarray(V, dtype=float)
    eta = eta_min(P, V)
    if eta <= 0:
        raise CertificateInfeasible(f"eta_min = {eta:.6g} is not positive")
    if validate:
        validate_certificate(T, cert, rng)
    selector = Selector(cfg.selection)
    trace = IterateTrace(seed=cfg.selection.seed)
    x = np.asarray(x0, dtype=float).copy()
    warned = False
    for _ in range(cfg.max_iters):
        xnext, xbar, vbar, alpha, lam, status = pppa_step(T, P, V, x, cfg.lambda_rule, selector, cfg.stop_tol)
        trace.x.append(x)
        trace.xbar.append(xbar)
        trace.vbar_norm.append(float(np.linalg.norm(vbar)))
        trace.shadow_res.append(math.sqrt(max(_qnorm2(P, P.Pi @ (x - xbar)), 0.0)))
        if status == "zero":
            trace.status = "zero"
            return trace
        trace.alpha.append(alpha)
        trace.lam.append(lam)
        if lam >= 2 * alpha:
            trace.relaxation_violations += 1
            if not warned:
                warnings.warn(f"relaxation {lam:.6g} is not below 2*alpha = {2 * alpha:.6g}", RelaxationWarning)
                warned = True
        if cfg.diagnostics and cert.Sstar:
            trace.fejer_gap.append(fejer_gap(P, cert, P.Pi @ x, P.Pi @ xnext, P.Pi @ xbar, lam, alpha))
        x = xnext
        if trace.vbar_norm[-1] <= cfg.stop_tol:
            trace.status = "converged"
            break
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > cfg.divergence_norm:
            trace.status = "diverged"
            break
    trace.x.append(x)
    return trace


def rate_certificate(trace, cert, P, kappa=None):
    """Best-iterate residual bound ``min ||vbar||^2 <= ||M|| ||x0 - x*||_M^2 / ((N+1) kappa)``.

    ``kappa`` defaults to the realized ``min_k lam_k (2 alpha_k - lam_k)``.
    """
    realized = trace.kappa
    if kappa is None:
        kappa = realized
    elif kappa > realized * (1 + 1e-12):
        raise KappaViolated(f"kappa {kappa:.6g} exceeds the realized minimum {realized:.6g}")
    if not kappa > 0:
        raise KappaViolated(f"realized kappa {kappa:.6g} is not positive")
    lhs = min(v * v for v in trace.vbar_norm)
    n_steps = len(trace.vbar_norm)
    x0 = np.asarray(trace.x0)
    rhs = P.norm * min(float((x0 - xs) @ (P.M @ (x0 - xs))) for xs in cert.Sstar) / (n_steps * kappa)
    return lhs, rhs, lhs <= rhs * (1 + 1e-9)


def rlinear_fit(trace, tail_fraction=0.5, min_points=20):
    """Geometric-rate fit of the trailing residuals.

    ``trace`` is an :class:`IterateTrace` (its ``shadow_res``) or a sequence of
    residuals. Returns ``(q, r2)`` with ``q = exp(slope)`` of a least-squares
    line through the log residuals.
    """
    values = trace.shadow_res if isinstance(trace, IterateTrace) else trace
    values = np.asarray(values, dtype=float)
    tail = values[int(len(values) * (1 - tail_fraction)) :]
    k = np.arange(len(values))[int(len(values) * (1 - tail_fraction)) :]
    keep = tail > 0
    if keep.sum() < min_points:
        raise InsufficientData(f"need {min_points} positive tail residuals, got {int(keep.sum())}")
    k, y = k[keep], np.log(tail[keep])
    slope, intercept = np.polyfit(k, y, 1)
    resid = y - (slope * k + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return math.exp(slope), r2
