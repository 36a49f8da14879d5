import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import certified_operator, random_params
from semisplit.catalog import nonsmooth_problem, saddle_operators, stationary_problem, toy_operator
from semisplit.errors import EmptyResolvent, OutOfDomain
from semisplit.operators import (
    CONSTANT_ONE,
    BANDED_PROFILE,
    BreakInterval,
    Linear,
    PrimalDual,
    ResolventSelection,
    ScaledIdentity,
    Selector,
    ValueSet,
    evaluate,
    full_domain_gamma_set,
    operator_from_dict,
    primal_dual_preconditioned_resolvent,
    resolvent,
    rotational_resolvent_radius,
    zero_residual,
)
from semisplit.semicalc import SemiParams, resolvent_gamma_range, resolvent_lipschitz


def profile_oracle(r):
    # toy radial profile written out piece by piece
    if r <= 0.4:
        return r
    if r < 0.8:
        return 0.8 - r
    if r <= 1.0:
        return 0.0
    if r < 1.4:
        return 2.5 * (r - 1.0)
    return 1.0


def inclusion_residual(T, gamma, s, x):
    return T.evaluate(x).map(gamma, x).distance(s)


def scan_solutions(T, gamma, s, lo=-8.0, hi=8.0, step=1e-4):
    """Brute-force roots of s in x + gamma T(x) on a grid, for 1-D piecewise maps."""
    xs = np.arange(lo, hi, step)
    found = []
    for lo_x, hi_x, m, q in T.pieces():
        k = 1 + gamma * m
        g = xs + gamma * (m * xs + q) - s
        inside = (xs > lo_x) & (xs < hi_x)
        sign = np.sign(g)
        cross = np.where(inside[:-1] & inside[1:] & (sign[:-1] * sign[1:] <= 0))[0]
        found += [xs[i] for i in cross]
    for p, vals in zip(T.breakpoints, T.values):
        vs = vals.values if hasattr(vals, "values") else None
        if vs is not None:
            if any(abs(p + gamma * v - s) < 1e-9 for v in vs):
                found.append(p)
        elif p + gamma * vals.lo - 1e-9 <= s <= p + gamma * vals.hi + 1e-9:
            found.append(p)
    return found


class TestEvaluate:
    def test_profile_matches_oracle(self):
        for r in np.linspace(0, 3, 301):
            assert BANDED_PROFILE(r) == pytest.approx(profile_oracle(r), abs=1e-15)

    def test_toy_zero_band(self):
        T = toy_operator()
        x = 0.9 * np.array([0.6, 0.8])
        assert evaluate(T, x).distance() == 0.0

    def test_nonsmooth_breakpoint_set(self):
        A = nonsmooth_problem().A
        vals = sorted(float(p[0]) for p in A.evaluate([1.0]).points)
        assert vals == [-4.0, 3.0]
        vals = sorted(float(p[0]) for p in A.evaluate([-1.0]).points)
        assert vals == [-9.0, -2.0]

    def test_interval_breakpoint(self):
        B = nonsmooth_problem().B
        vs = B.evaluate([-1.0])
        assert vs.contains([-5.0]) and vs.contains([1.0]) and vs.contains([0.0])
        assert not vs.contains([1.5])

    def test_linear(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.allclose(evaluate(Linear(M), [1.0, -1.0]).points[0], M @ [1, -1])

    def test_valueset_product_and_distance(self):
        a = ValueSet.from_points([[1.0], [3.0]])
        b = ValueSet(((np.array([-1.0]), np.array([1.0])),))
        prod = ValueSet.product(a, b)
        assert len(prod) == 2
        assert prod.distance([1.0, 0.5]) == 0.0
        assert prod.distance([2.0, 2.0]) == pytest.approx(math.sqrt(2))


class TestResolvent:
    def test_scaled_identity(self):
        x, _ = resolvent(ScaledIdentity(2.0, 3), 0.5, np.array([1.0, 2.0, 4.0]))
        assert np.allclose(x, np.array([1.0, 2.0, 4.0]) / 2)

    def test_rotational_constant_profile(self):
        a, b = 2.0, 1.0
        T = toy_operator(a, b, "constant")
        s = np.array([0.3, -1.7])
        x, allx = resolvent(T, 1.0, s)
        oracle = np.array([[1 + b, -a], [a, 1 + b]]) @ s / ((1 + b) ** 2 + a * a)
        assert len(allx) == 1
        assert np.allclose(x, oracle, atol=1e-13)

    def test_nonsmooth_B_at_zero(self):
        x, allx = resolvent(nonsmooth_problem().B, 0.1, [0.0])
        assert len(allx) == 1
        assert x[0] == pytest.approx(-0.25, abs=1e-15)

    def test_radius_constant(self):
        g, s = 0.7, 2.3
        r = rotational_resolvent_radius(2.0, 1.0, CONSTANT_ONE, g, s)
        assert r == [pytest.approx(s / math.hypot(1 + g, 2 * g), rel=1e-12)]

    def test_radius_zero(self):
        assert rotational_resolvent_radius(2.0, 1.0, BANDED_PROFILE, 1.0, 0.0) == [0.0]

    def test_radius_zero_band(self):
        rs = rotational_resolvent_radius(2.0, 1.0, BANDED_PROFILE, 1.0, 0.9)
        assert any(abs(r - 0.9) < 1e-12 for r in rs)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0.05, 3.0),
        st.floats(-4, 4, allow_nan=False),
        st.floats(-4, 4, allow_nan=False),
    )
    def test_rotational_inclusion(self, gamma, s0, s1):
        T = toy_operator()
        s = np.array([s0, s1])
        _, allx = resolvent(T, gamma, s)
        for x in allx.points:
            assert inclusion_residual(T, gamma, s, x) <= 1e-8

    @pytest.mark.parametrize("make", [lambda: nonsmooth_problem().A, lambda: nonsmooth_problem().B,
                                      lambda: stationary_problem().A, lambda: stationary_problem().B])
    def test_piecewise_inclusion_and_completeness(self, make):
        T = make()
        rng = np.random.default_rng(0)
        gamma = 0.15
        for s in rng.uniform(-6, 6, 100):
            _, allx = resolvent(T, gamma, [s])
            pts = [float(p[0]) for p in allx.points]
            for x in pts:
                assert inclusion_residual(T, gamma, [s], [x]) <= 1e-10
            for x in scan_solutions(T, gamma, s):
                assert min(abs(x - p) for p in pts) <= 2e-4

    def test_empty_resolvent(self):
        with pytest.raises(EmptyResolvent):
            resolvent(ScaledIdentity(-1.0), 1.0, [1.0])

    def test_gamma_positive(self):
        with pytest.raises(ValueError):
            resolvent(ScaledIdentity(1.0), 0.0, [1.0])

    def test_lipschitz_bound_on_certified_operators(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(20):
            p = random_params(rng)
            T = certified_operator(rng, p)
            rng_g = resolvent_gamma_range(p)
            hi = min(rng_g.hi, rng_g.lo + 5.0)
            gamma = rng.uniform(rng_g.lo, hi)
            if gamma not in rng_g:
                continue
            L = resolvent_lipschitz(p, gamma)
            sols = []
            for s in rng.uniform(-4, 4, 50):
                sols += [(s, float(x[0])) for x in T.preimage([s], 1.0, gamma).points]
            for (s, x), (s2, x2) in zip(sols, sols[1:]):
                assert abs(x - x2) <= L * abs(s - s2) * (1 + 1e-9) + 1e-12
                checked += 1
        assert checked > 500


class TestSelection:
    def test_uniform_reproducible(self):
        vs = ValueSet.from_points([[0.0], [1.0], [2.0]])
        a = Selector(ResolventSelection.uniform(5))
        b = Selector(ResolventSelection.uniform(5))
        assert [float(a.choose(vs, [0])[0]) for _ in range(20)] == [float(b.choose(vs, [0])[0]) for _ in range(20)]

    def test_deterministic_nearest(self):
        vs = ValueSet.from_points([[0.0], [1.0], [2.0]])
        assert Selector().choose(vs, [1.8])[0] == 2.0

    def test_ties_go_to_smaller_norm(self):
        vs = ValueSet.from_points([[-1.0], [1.0]])
        assert Selector().choose(vs, [0.0])[0] == -1.0

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            ResolventSelection("random")


class TestPrimalDualResolvent:
    def test_zero_operators(self):
        Z = ScaledIdentity(0.0, 2)
        z = np.array([1.0, 2.0, 0.5, -1.0])
        gamma = 0.7
        zbar = primal_dual_preconditioned_resolvent(Z, Z, gamma, z)
        assert np.allclose(zbar[:2], z[:2] - gamma * z[2:])
        assert np.allclose(zbar[2:], 0.0)

    def test_saddle_closed_form(self):
        a, b, gamma = 2.0, -1.0, 0.5
        A, B = saddle_operators(a, b)
        z = np.array([1.0, 0.0, 0.0, 0.0])
        zbar = primal_dual_preconditioned_resolvent(A, B, gamma, z)
        Ka = np.array([[1.0, gamma * a], [-gamma * a, 1.0]])
        xbar = np.linalg.solve(Ka, z[:2])
        r = 2 * xbar - z[:2]
        v = r / (1 + gamma * b)
        assert np.allclose(zbar[:2], xbar) and np.allclose(zbar[2:], (r - v) / gamma)

    def test_solves_preconditioned_inclusion(self):
        # M z in M zbar + T_PD(zbar)
        prob = nonsmooth_problem()
        T = PrimalDual(prob.A, prob.B)
        gamma = 0.13
        M = np.array([[1 / gamma, -1.0], [-1.0, gamma]])
        rng = np.random.default_rng(0)
        for z in rng.uniform(-3, 3, (200, 2)):
            zbar = primal_dual_preconditioned_resolvent(prob.A, prob.B, gamma, z)
            target = M @ (z - zbar)
            assert T.evaluate(zbar).distance(target) <= 1e-10


class TestZerosAndDomain:
    def test_toy_zeros(self):
        T = toy_operator()
        assert zero_residual(T, np.zeros(2)) == 0.0
        assert zero_residual(T, np.array([0.9, 0.0])) == 0.0
        assert zero_residual(T, np.array([2.0, 0.0])) > 0

    def test_stationary_zero(self):
        prob = stationary_problem()
        assert prob.A.evaluate([0.0]).contains([-1.0])
        assert prob.B.evaluate([0.0]).contains([1.0])
        pts_sum = [a + b for a in prob.A.evaluate([0.0]).points for b in prob.B.evaluate([0.0]).points]
        assert min(abs(float(v[0])) for v in pts_sum) == 0.0

    def test_out_of_domain_for_shifted(self):
        # (0 + xi I)^-1 with xi = 0 has domain {0}
        from semisplit.operators import Shifted

        T = Shifted(ScaledIdentity(0.0), 0.0, 0.0)
        with pytest.raises((OutOfDomain, EmptyResolvent)):
            T.evaluate([1.0])

    def test_nonsmooth_full_domain_grid(self):
        A = nonsmooth_problem().A
        sets = full_domain_gamma_set(A)
        covered = lambda g: any(g in iv for iv in sets)
        for g in np.arange(0.05, 1.0, 0.05):
            assert covered(g)
        assert not covered(1.0)

        # grid oracle: the image of id + gamma dfA over a wide mesh covers [-10, 10] without gaps
        def image(gamma):
            xs = np.linspace(-50, 50, 200001)
            img = []
            for x in xs:
                img += [x + gamma * float(v[0]) for v in A.evaluate([x]).points]
            return np.sort(img)

        def covers(img, lo=-10.0, hi=10.0, gap=1e-2):
            inside = img[(img >= lo) & (img <= hi)]
            return inside[0] - lo < gap and hi - inside[-1] < gap and np.max(np.diff(inside)) < gap

        assert covers(image(0.5))
        assert not covers(image(1.0))
        assert np.max(image(1.0)) <= 4.0 + 1e-12

    def test_stationary_domain_sets(self):
        A = stationary_problem().A
        sets = full_domain_gamma_set(A)
        assert any(abs(iv.hi - 0.2) < 1e-14 for iv in sets)
        assert not any(0.21 in iv for iv in sets)


class TestSerialization:
    @pytest.mark.parametrize(
        "T",
        [
            toy_operator(),
            toy_operator(profile="constant"),
            nonsmooth_problem().A,
            nonsmooth_problem().B,
            Linear(np.array([[0.0, 2.0], [-2.0, 0.0]])),
            ScaledIdentity(-1.0, 2),
            PrimalDual(nonsmooth_problem().A, nonsmooth_problem().B),
        ],
    )
    def test_round_trip(self, T):
        d = json.loads(json.dumps(T.to_dict()))
        T2 = operator_from_dict(d)
        assert T2.to_dict() == T.to_dict()
        x = np.ones(T.dim) * 0.37
        assert T2.evaluate(x).distance(T.evaluate(x).points[0]) == 0.0

    def test_shifted_round_trip(self):
        rng = np.random.default_rng(0)
        T = certified_operator(rng, SemiParams(-0.2, 0.3))
        T2 = operator_from_dict(json.loads(json.dumps(T.to_dict())))
        assert T2.to_dict() == T.to_dict()

    def test_unknown(self):
        with pytest.raises(ValueError):
            operator_from_dict({"type": "Nope"})

    def test_break_interval_round_trip(self):
        assert BreakInterval(1.0, 2.0).to_dict() == {"interval": [1.0, 2.0]}
