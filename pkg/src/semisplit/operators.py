"""Set-valued operators with exact graph evaluation and resolvents.

Every operator knows how to solve the generalized inclusion
``t in c1*x + c2*T(x)`` for ``x`` (:meth:`Operator.preimage`). The resolvent
``J_{gamma T}`` is the special case ``c1 = 1, c2 = gamma``; inverses and the
shifted construction ``(base + xi I)^-1 + nu I`` reuse the same routine.

Vectors are 1-D ``numpy`` arrays, scalars included (shape ``(1,)``).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyResolvent, OutOfDomain, RootSolveFailure

__all__ = [
    "ValueSet",
    "ResolventSelection",
    "Selector",
    "Operator",
    "Linear",
    "ScaledIdentity",
    "PiecewiseLinearProfile",
    "CONSTANT_ONE",
    "BANDED_PROFILE",
    "Rotational",
    "BreakSet",
    "BreakInterval",
    "PiecewiseGradient",
    "Shifted",
    "PrimalDual",
    "evaluate",
    "resolvent",
    "rotational_resolvent_radius",
    "primal_dual_preconditioned_resolvent",
    "zero_residual",
    "full_domain_gamma_set",
    "operator_from_dict",
]

_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _vec(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class ValueSet:
    """Finite union of closed boxes ``[lo, hi]``; a point has ``lo == hi``.

    Boxes only arise in one dimension (breakpoint intervals) or as products
    of one-dimensional pieces.
    """

    elements: tuple

    @classmethod
    def from_points(cls, points):
        return cls(tuple((_vec(p), _vec(p)) for p in points))

    @property
    def is_empty(self):
        return len(self.elements) == 0

    @property
    def points(self):
        """Representative points: the points themselves and box midpoints."""
        return [0.5 * (lo + hi) for lo, hi in self.elements]

    def __len__(self):
        return len(self.elements)

    def nearest(self, ref):
        """Closest point of each element to ``ref``."""
        ref = _vec(ref)
        return [np.clip(ref, lo, hi) for lo, hi in self.elements]

    def distance(self, y=None):
        if self.is_empty:
            return math.inf
        if y is None:
            y = np.zeros_like(self.elements[0][0])
        return min(float(np.linalg.norm(p - _vec(y))) for p in self.nearest(y))

    def contains(self, y, tol=1e-10):
        return self.distance(y) <= tol

    def map(self, scale, shift):
        """Image under ``v -> scale*v + shift`` for a scalar ``scale``."""
        out = []
        for lo, hi in self.elements:
            a, b = scale * lo + shift, scale * hi + shift
            out.append((np.minimum(a, b), np.maximum(a, b)))
        return ValueSet(tuple(out))

    @staticmethod
    def product(first, second):
        """Cartesian product, concatenating coordinates."""
        return ValueSet(
            tuple(
                (np.concatenate([lo1, lo2]), np.concatenate([hi1, hi2]))
                for lo1, hi1 in first.elements
                for lo2, hi2 in second.elements
            )
        )

    def __repr__(self):
        parts = []
        for lo, hi in self.elements:
            parts.append(str(lo.tolist()) if np.array_equal(lo, hi) else f"[{lo.tolist()}, {hi.tolist()}]")
        return "ValueSet{" + ", ".join(parts) + "}"


@dataclass(frozen=True)
class ResolventSelection:
    """How to pick one element of a multi-valued resolvent.

    ``mode='deterministic'`` picks the element nearest to a reference point
    (the previous iterate), ties broken by smallest norm. ``mode='uniform'``
    draws each element with equal probability from a generator seeded with
    ``seed``.
    """

    mode: str = "deterministic"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("deterministic", "uniform"):
            raise ValueError(f"unknown selection mode {self.mode!r}")

    @classmethod
    def uniform(cls, seed=0):
        return cls("uniform", seed)

    def selector(self):
        return Selector(self)


class Selector:
    """Stateful selection; holds the generator for one solver run."""

    def __init__(self, selection=None):
        self.selection = selection or ResolventSelection()
        self.rng = np.random.default_rng(self.selection.seed)

    def choose(self, values, ref):
        if values.is_empty:
            raise EmptyResolvent("no element to choose from")
        if len(values) == 1:
            lo, hi = values.elements[0]
            return np.clip(_vec(ref), lo, hi) if self.selection.mode == "deterministic" else self._draw(lo, hi)
        if self.selection.mode == "uniform":
            lo, hi = values.elements[self.rng.integers(len(values))]
            return self._draw(lo, hi)
        ref = _vec(ref)
        cands = values.nearest(ref)
        dists = [float(np.linalg.norm(c - ref)) for c in cands]
        best = min(dists)
        tied = [c for c, d in zip(cands, dists) if d <= best + 1e-15 * max(1.0, best)]
        return min(tied, key=lambda c: (float(np.linalg.norm(c)), tuple(c)))

    def _draw(self, lo, hi):
        if np.array_equal(lo, hi):
            return lo.copy()
        return lo + self.rng.random(lo.shape) * (hi - lo)


def _as_selector(sel):
    if isinstance(sel, Selector):
        return sel
    return Selector(sel)


class Operator:
    """Interface of catalog operators."""

    dim = 1

    def evaluate(self, x):
        raise NotImplementedError

    def preimage(self, t, c1, c2):
        """All ``x`` with ``t in c1*x + c2*T(x)``."""
        raise NotImplementedError

    def sample_graph(self, rng, size, scale=3.0):
        """``size`` random graph pairs ``(x, y)`` with ``y in T(x)``."""
        out = []
        for _ in range(size):
            x = rng.uniform(-scale, scale, self.dim)
            vals = self.evaluate(x)
            lo, hi = vals.elements[rng.integers(len(vals))]
            out.append((x, lo + rng.random(lo.shape) * (hi - lo)))
        return out

    def to_dict(self):
        raise NotImplementedError


# -- linear maps -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Linear(Operator):
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.atleast_2d(np.asarray(self.matrix, dtype=float)))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def evaluate(self, x):
        return ValueSet.from_points([self.matrix @ _vec(x)])

    def preimage(self, t, c1, c2):
        K = c1 * np.eye(self.dim) + c2 * self.matrix
        try:
            return ValueSet.from_points([np.linalg.solve(K, _vec(t))])
        except np.linalg.LinAlgError as exc:
            raise EmptyResolvent(f"c1*I + c2*A is singular for c1={c1}, c2={c2}") from exc

    def to_dict(self):
        return {"type": "Linear", "matrix": self.matrix.tolist()}


@dataclass(frozen=True, eq=False)
class ScaledIdentity(Operator):
    alpha: float
    dim: int = 1

    def evaluate(self, x):
        return ValueSet.from_points([self.alpha * _vec(x)])

    def preimage(self, t, c1, c2):
        k = c1 + c2 * self.alpha
        if k == 0:
            raise EmptyResolvent(f"c1 + c2*alpha vanishes for c1={c1}, c2={c2}")
        return ValueSet.from_points([_vec(t) / k])

    def to_dict(self):
        return {"type": "ScaledIdentity", "alpha": self.alpha, "dim": self.dim}


# -- radially modulated rotation in the plane ---------------------------------


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    """Continuous piecewise-linear ``f`` on ``[0, inf)`` through ``(knots, values)``.

    Constant beyond the last knot.
    """

    knots: tuple
    values: tuple

    def __post_init__(self):
        if len(self.knots) != len(self.values) or self.knots[0] != 0:
            raise ValueError("profile knots must start at 0 and match values")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise ValueError("profile knots must increase")

    def __call__(self, r):
        return float(np.interp(r, self.knots, self.values))

    def pieces(self):
        """``(r0, r1, slope, intercept)`` with ``f(r) = slope*r + intercept`` on ``[r0, r1]``."""
        out = []
        for (r0, f0), (r1, f1) in zip(zip(self.knots, self.values), zip(self.knots[1:], self.values[1:])):
            slope = (f1 - f0) / (r1 - r0)
            out.append((r0, r1, slope, f0 - slope * r0))
        out.append((self.knots[-1], math.inf, 0.0, self.values[-1]))
        return out


CONSTANT_ONE = PiecewiseLinearProfile((0.0,), (1.0,))
BANDED_PROFILE = PiecewiseLinearProfile((0.0, 0.4, 0.8, 1.0, 1.4), (0.0, 0.4, 0.0, 0.0, 1.0))


@dataclass(frozen=True)
class Rotational(Operator):
    """``T(x) = f(|x|) [[b, a], [-a, b]] x`` on the plane."""

    a: float
    b: float
    profile: PiecewiseLinearProfile = CONSTANT_ONE
    dim: int = field(default=2, init=False)

    @property
    def rotation(self):
        return np.array([[self.b, self.a], [-self.a, self.b]])

    def evaluate(self, x):
        x = _vec(x)
        return ValueSet.from_points([self.profile(np.linalg.norm(x)) * (self.rotation @ x)])

    def preimage(self, t, c1, c2):
        t = _vec(t)
        radii = _radial_roots(self.a, self.b, self.profile, c1, c2, float(np.linalg.norm(t)))
        points = []
        for r in radii:
            fr = self.profile(r)
            al, be = c1 + c2 * fr * self.b, c2 * fr * self.a
            points.append((al * t - be * (_J2 @ t)) / (al * al + be * be))
        return ValueSet.from_points(points)

    def to_dict(self):
        return {
            "type": "Rotational",
            "a": self.a,
            "b": self.b,
            "profile": {"knots": list(self.profile.knots), "values": list(self.profile.values)},
        }


def _radial_roots(a, b, profile, c1, c2, snorm, tol=1e-12):
    # radii r >= 0 with snorm = r * sqrt((c1 + c2 f b)^2 + (c2 f a)^2)
    if snorm == 0.0:
        return [0.0]
    P = np.polynomial.polynomial
    found = []
    for r0, r1, p, q in profile.pieces():
        u = np.array([c1 + c2 * b * q, c2 * b * p])
        w = np.array([c2 * a * q, c2 * a * p])
        h = P.polyadd(P.polymul([0.0, 0.0, 1.0], P.polyadd(P.polymul(u, u), P.polymul(w, w))), [-snorm * snorm])
        h = P.polytrim(h, 0.0)
        if len(h) < 2:
            continue

        def g(r):
            fr = p * r + q
            return r * math.hypot(c1 + c2 * fr * b, c2 * fr * a) - snorm

        for z in P.polyroots(h):
            if abs(z.imag) > 1e-6 * (1.0 + abs(z.real)):
                continue
            r = z.real
            if not (r0 - 1e-9 <= r <= r1 + 1e-9) or r < 0:
                continue
            found.append(_polish(g, r, max(r0, 0.0), r1, tol * max(1.0, snorm)))
    found.sort()
    uniq = []
    for r in found:
        if not uniq or r - uniq[-1] > 1e-10 * max(1.0, r):
            uniq.append(r)
    if not uniq:
        raise RootSolveFailure(f"no admissible radius for |s| = {snorm}")
    return uniq


def _polish(g, r, lo, hi, tol, max_iter=200):
    # bisection on a bracket around the polynomial root estimate
    r = min(max(r, lo), hi)
    if abs(g(r)) <= tol:
        return r
    width = 1e-6 * max(1.0, abs(r))
    a, b = max(lo, r - width), min(hi, r + width)
    ga, gb = g(a), g(b)
    if ga * gb > 0:
        raise RootSolveFailure(f"could not bracket radial root near r={r}")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        gm = g(m)
        if abs(gm) <= tol or b - a <= 1e-15 * max(1.0, abs(m)):
            return m
        if ga * gm <= 0:
            b, gb = m, gm
        else:
            a, ga = m, gm
    raise RootSolveFailure(f"bisection did not converge near r={r}")


def rotational_resolvent_radius(a, b, profile, gamma, snorm):
    """Admissible radii ``r`` of resolvent points of :class:`Rotational` at ``|s| = snorm``."""
    return _radial_roots(a, b, profile, 1.0, gamma, snorm)


# -- one-dimensional piecewise affine subdifferentials ------------------------


@dataclass(frozen=True)
class BreakSet:
    values: tuple

    def to_dict(self):
        return {"set": list(self.values)}


@dataclass(frozen=True)
class BreakInterval:
    lo: float
    hi: float

    def to_dict(self):
        return {"interval": [self.lo, self.hi]}


def _break_from_dict(d):
    if "set" in d:
        return BreakSet(tuple(float(v) for v in d["set"]))
    lo, hi = d["interval"]
    return BreakInterval(float(lo), float(hi))


@dataclass(frozen=True)
class PiecewiseGradient(Operator):
    """Set-valued map on the real line, affine between breakpoints.

    On the open piece between consecutive breakpoints the value is
    ``slopes[i]*x + intercepts[i]``; at breakpoint ``p_j`` the value is the
    explicit finite set or closed interval ``values[j]``.
    """

    breakpoints: tuple
    slopes: tuple
    intercepts: tuple
    values: tuple

    def __post_init__(self):
        nb = len(self.breakpoints)
        if len(self.slopes) != nb + 1 or len(self.intercepts) != nb + 1 or len(self.values) != nb:
            raise ValueError("need len(breakpoints)+1 pieces and one value set per breakpoint")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must increase")

    def pieces(self):
        edges = (-math.inf,) + tuple(self.breakpoints) + (math.inf,)
        return [(edges[i], edges[i + 1], self.slopes[i], self.intercepts[i]) for i in range(len(self.slopes))]

    def evaluate(self, x):
        xv = float(_vec(x)[0])
        for p, vals in zip(self.breakpoints, self.values):
            if xv == p:
                if isinstance(vals, BreakSet):
                    return ValueSet.from_points([[v] for v in vals.values])
                return ValueSet(((_vec(vals.lo), _vec(vals.hi)),))
        for lo, hi, m, q in self.pieces():
            if lo < xv < hi:
                return ValueSet.from_points([[m * xv + q]])
        raise OutOfDomain(f"x={xv} is not in the domain")

    def preimage(self, t, c1, c2):
        tv = float(_vec(t)[0])
        scale = max(1.0, abs(tv))
        elems = []
        for lo, hi, m, q in self.pieces():
            k = c1 + c2 * m
            rhs = tv - c2 * q
            if k == 0:
                if rhs == 0:
                    if math.isinf(lo) or math.isinf(hi):
                        raise EmptyResolvent("solution set contains an unbounded interval")
                    elems.append((_vec(lo), _vec(hi)))
                continue
            x = rhs / k
            if lo < x < hi:
                elems.append((_vec(x), _vec(x)))
        for p, vals in zip(self.breakpoints, self.values):
            base = c1 * p
            if isinstance(vals, BreakSet):
                hit = any(abs(base + c2 * v - tv) <= 1e-13 * scale for v in vals.values)
            else:
                a, b = sorted((base + c2 * vals.lo, base + c2 * vals.hi))
                hit = a - 1e-13 * scale <= tv <= b + 1e-13 * scale
            if hit:
                elems.append((_vec(p), _vec(p)))
        elems.sort(key=lambda e: float(e[0][0]))
        return ValueSet(tuple(elems))

    def sample_graph(self, rng, size, scale=3.0):
        out = []
        pts = list(self.breakpoints)
        for i in range(size):
            if pts and i % 10 == 0:
                x = _vec(pts[rng.integers(len(pts))])
            else:
                x = rng.uniform(-scale, scale, 1)
            vals = self.evaluate(x)
            lo, hi = vals.elements[rng.integers(len(vals))]
            out.append((x, lo + rng.random(1) * (hi - lo)))
        return out

    def to_dict(self):
        return {
            "type": "PiecewiseGradient",
            "breakpoints": list(self.breakpoints),
            "slopes": list(self.slopes),
            "intercepts": list(self.intercepts),
            "values": [v.to_dict() for v in self.values],
        }


# -- generated operators -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Shifted(Operator):
    """``(base + xi I)^-1 + nu I``."""

    base: Operator
    xi: float
    nu: float

    @property
    def dim(self):
        return self.base.dim

    def evaluate(self, x):
        x = _vec(x)
        ws = self.base.preimage(x, self.xi, 1.0)
        if ws.is_empty:
            raise OutOfDomain(f"x={x} is outside the domain of the shifted operator")
        return ws.map(1.0, self.nu * x)

    def preimage(self, t, c1, c2):
        t = _vec(t)
        d = c1 + c2 * self.nu
        ws = self.base.preimage(t, d * self.xi + c2, d)
        if d != 0:
            return ws.map(-c2 / d, t / d)
        # t = c2*w, so x ranges over xi*w + base(w)
        if ws.is_empty:
            return ws
        w = t / c2
        return self.base.evaluate(w).map(1.0, self.xi * w)

    def sample_graph(self, rng, size, scale=3.0):
        out = []
        for w, b in self.base.sample_graph(rng, size, scale):
            x = self.xi * w + b
            out.append((x, w + self.nu * x))
        return out

    def to_dict(self):
        return {"type": "Shifted", "base": self.base.to_dict(), "xi": self.xi, "nu": self.nu}


@dataclass(frozen=True, eq=False)
class PrimalDual(Operator):
    """``T(x, y) = (A x + y, B^-1 y - x)``."""

    A: Operator
    B: Operator

    @property
    def dim(self):
        return 2 * self.A.dim

    def split(self, z):
        z = _vec(z)
        n = self.A.dim
        return z[:n], z[n:]

    def evaluate(self, z):
        x, y = self.split(z)
        binv = self.B.preimage(y, 0.0, 1.0)
        if binv.is_empty:
            raise OutOfDomain(f"y={y} is outside the range of B")
        return ValueSet.product(self.A.evaluate(x).map(1.0, y), binv.map(1.0, -x))

    def preimage(self, t, c1, c2):
        raise NotImplementedError("use primal_dual_preconditioned_resolvent")

    def sample_graph(self, rng, size, scale=3.0):
        out = []
        for (x, a), (w, y) in zip(self.A.sample_graph(rng, size, scale), self.B.sample_graph(rng, size, scale)):
            out.append((np.concatenate([x, y]), np.concatenate([a + y, w - x])))
        return out

    def to_dict(self):
        return {"type": "PrimalDual", "A": self.A.to_dict(), "B": self.B.to_dict()}


# -- module-level operations -------------------------------------------------------


def evaluate(T, x):
    """Image set ``T(x)``."""
    return T.evaluate(x)


def resolvent(T, gamma, s, sel=None, ref=None):
    """Resolvent ``J_{gamma T}(s)``.

    Returns the selected point and the full solution set. ``ref`` is the
    reference for deterministic selection and defaults to ``s``.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    s = _vec(s)
    values = T.preimage(s, 1.0, gamma)
    if values.is_empty:
        raise EmptyResolvent(f"J_(gamma T)({s.tolist()}) is empty for gamma={gamma}")
    choice = _as_selector(sel).choose(values, s if ref is None else ref)
    return choice, values


def primal_dual_preconditioned_resolvent(A, B, gamma, z, sel=None):
    """One preconditioned resolvent step on the primal-dual operator.

    Returns ``zbar = (xbar, ybar)`` with ``xbar in J_{gamma A}(x - gamma y)`` and
    ``ybar = (r - J_{gamma B}(r)) / gamma`` for ``r = 2 xbar - x + gamma y``.
    """
    selector = _as_selector(sel)
    z = _vec(z)
    n = A.dim
    x, y = z[:n], z[n:]
    xbar, _ = resolvent(A, gamma, x - gamma * y, selector)
    r = 2.0 * xbar - x + gamma * y
    v, _ = resolvent(B, gamma, r, selector)
    return np.concatenate([xbar, (r - v) / gamma])


def zero_residual(T, x):
    """Distance from the origin to ``T(x)``."""
    return T.evaluate(x).distance()


def _covers_line(intervals, scale):
    # sweep over closed intervals, tolerating round-off at touching endpoints
    reach = -math.inf
    for lo, hi in sorted(intervals):
        if lo > reach + 1e-12 * scale:
            return False
        reach = max(reach, hi)
        if math.isinf(reach) and reach > 0:
            return True
    return False


def _range_is_line(T, gamma):
    ivs = []
    for lo, hi, m, q in T.pieces():
        k = 1.0 + gamma * m
        ends = [k * e + gamma * q if math.isfinite(e) else math.copysign(math.inf, e * k) if k != 0 else gamma * q for e in (lo, hi)]
        ivs.append((min(ends), max(ends)))
    for p, vals in zip(T.breakpoints, T.values):
        vs = vals.values if isinstance(vals, BreakSet) else (vals.lo, vals.hi)
        if isinstance(vals, BreakSet):
            ivs.extend((p + gamma * v, p + gamma * v) for v in vs)
        else:
            ivs.append((p + gamma * vals.lo, p + gamma * vals.hi))
    scale = max([1.0] + [abs(v) for iv in ivs for v in iv if math.isfinite(v)])
    return _covers_line(ivs, scale)


def full_domain_gamma_set(T, gamma_max=None):
    """Open intervals of ``gamma > 0`` for which ``id + gamma T`` maps onto the line.

    Only for :class:`PiecewiseGradient`. The image's endpoints are affine in
    ``gamma``, so coverage can only change where a piece slope ``1 + gamma m``
    vanishes or two endpoints cross; coverage is tested between consecutive
    critical values.
    """
    from .semicalc import GammaInterval

    ends = []
    for lo, hi, m, q in T.pieces():
        for e in (lo, hi):
            if math.isfinite(e):
                ends.append((e, m * e + q))
    for p, vals in zip(T.breakpoints, T.values):
        for v in vals.values if isinstance(vals, BreakSet) else (vals.lo, vals.hi):
            ends.append((p, v))
    crit = {-1.0 / m for m in T.slopes if m < 0}
    for i, (p1, v1) in enumerate(ends):
        for p2, v2 in ends[i + 1 :]:
            if v1 != v2:
                g = (p2 - p1) / (v1 - v2)
                if g > 0:
                    crit.add(g)
    crit = sorted(crit)
    top = gamma_max if gamma_max is not None else (2.0 * crit[-1] + 1.0 if crit else 1.0)
    grid = [0.0] + [c for c in crit if c < top] + [top]
    intervals = []
    for lo, hi in zip(grid, grid[1:]):
        if _range_is_line(T, 0.5 * (lo + hi)):
            if intervals and intervals[-1][1] == lo and _range_is_line(T, lo):
                intervals[-1][1] = hi
            else:
                intervals.append([lo, hi])
    if intervals and intervals[-1][1] == top and gamma_max is None:
        intervals[-1][1] = math.inf
    return [GammaInterval(lo, hi) for lo, hi in intervals]


def operator_from_dict(d):
    """Inverse of ``Operator.to_dict``."""
    kind = d["type"]
    if kind == "Linear":
        return Linear(np.array(d["matrix"], dtype=float))
    if kind == "ScaledIdentity":
        return ScaledIdentity(float(d["alpha"]), int(d.get("dim", 1)))
    if kind == "Rotational":
        prof = d.get("profile")
        profile = CONSTANT_ONE if prof is None else PiecewiseLinearProfile(tuple(prof["knots"]), tuple(prof["values"]))
        return Rotational(float(d["a"]), float(d["b"]), profile)
    if kind == "PiecewiseGradient":
        return PiecewiseGradient(
            tuple(float(v) for v in d["breakpoints"]),
            tuple(float(v) for v in d["slopes"]),
            tuple(float(v) for v in d["intercepts"]),
            tuple(_break_from_dict(v) for v in d["values"]),
        )
    if kind == "Shifted":
        return Shifted(operator_from_dict(d["base"]), float(d["xi"]), float(d["nu"]))
    if kind == "PrimalDual":
        return PrimalDual(operator_from_dict(d["A"]), operator_from_dict(d["B"]))
    raise ValueError(f"unknown operator type {kind!r}")
