from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimentropy.caratheodory import (
    BallFamily,
    Decomposition,
    bowen_entropy_estimate,
    bowen_outer_measure,
    build_increasing_sequence,
    critical_exponent,
    orbit_decomposition,
    packing_entropy_estimate,
    packing_premeasure,
    singleton_decomposition,
)
from dimentropy.capacity import capacity_entropy_estimate
from dimentropy.core import FiniteSystem, SubsetRef
from dimentropy.errors import ContractError, DecompositionError
from dimentropy.estimates import ScaleSchedule
from dimentropy.symbolic import CylinderSet, SftSpec, SymbolicScale, cylinder_cover_value, first_symbol_decomposition

import oracles

LOG2 = math.log(2)
FULL2 = SftSpec.full(2)
GOLDEN = SftSpec.from_forbidden("01", ["11"], name="goldenmean")


def system(table, step):
    return FiniteSystem(range(len(table)), np.array(table, float), step)


@st.composite
def instances(draw, max_points=5):
    rng = random.Random(draw(st.integers(0, 2**32 - 1)))
    k = rng.randint(1, max_points)
    table, step = oracles.random_system(rng, k)
    z = [i for i in range(k) if rng.random() < 0.7] or [k - 1]
    return table, step, z


def test_cover_at_s_zero_counts_balls():
    sys = system([[0, 1], [1, 0]], [1, 0])
    sol = bowen_outer_measure(sys, sys.full(), 0.0, ScaleSchedule(N=1, n_max=3, epsilons=(5.0,)))
    assert sol.value == 1 and sol.optimal


def test_cover_of_singleton_uses_deepest_ball():
    sys = system([[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1, 2, 0])
    sol = bowen_outer_measure(sys, sys.subset([1]), 0.7, ScaleSchedule(N=2, n_max=5, epsilons=(0.5,)))
    assert sol.value == math.exp(-0.7 * 5)


def test_packing_with_tiny_radius():
    sys = system([[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1, 2, 0])
    sol = packing_premeasure(sys, sys.full(), 0.0, ScaleSchedule(N=1, n_max=1, epsilons=(0.5,)))
    assert sol.value == 3


def test_packing_with_huge_radius():
    sys = system([[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1, 2, 0])
    sol = packing_premeasure(sys, sys.full(), 0.8, ScaleSchedule(N=2, n_max=4, epsilons=(9.0,)))
    assert sol.value == math.exp(-0.8 * 2)


@settings(max_examples=60, deadline=None)
@given(instances(), st.sampled_from([0.0, 0.3, 0.5, 1.2]), st.sampled_from([1.0, 1.5, 2.5]))
def test_cover_matches_enumeration(inst, s, eps):
    table, step, z = inst
    sys = system(table, step)
    sol = bowen_outer_measure(sys, sys.subset(z), s, ScaleSchedule(N=1, n_max=3, epsilons=(eps,)))
    want, _ = oracles.cover_value(table, step, z, s, 1, 3, eps)
    assert sol.value == want
    assert sol.value == math.fsum(math.exp(-s * b.order) for b in sol.balls)
    for y in z:
        assert any(oracles.dn(table, step, b.center, y, b.order) < eps for b in sol.balls)


@settings(max_examples=60, deadline=None)
@given(instances(), st.sampled_from([0.0, 0.3, 0.5, 1.2]), st.sampled_from([1.0, 1.5, 2.5]))
def test_packing_matches_enumeration(inst, s, eps):
    table, step, z = inst
    sys = system(table, step)
    sol = packing_premeasure(sys, sys.subset(z), s, ScaleSchedule(N=1, n_max=3, epsilons=(eps,)))
    want, _ = oracles.packing_value(table, step, z, s, 1, 3, eps)
    assert sol.value == want
    assert sol.value == math.fsum(math.exp(-s * b.order) for b in sol.balls)
    balls = [{y for y in range(len(table)) if oracles.dn(table, step, b.center, y, b.order) <= eps} for b in sol.balls]
    assert all(b.center in z for b in sol.balls)
    assert sum(map(len, balls)) == len(set().union(*balls))


@settings(max_examples=60, deadline=None)
@given(instances(6), st.sampled_from([0.0, 0.4, 1.0]), st.sampled_from([1.0, 2.0]))
def test_fixed_scale_monotonicity(inst, s, eps):
    table, step, z = inst
    sys = system(table, step)
    zz = sys.subset(z)

    def m(N, n_max, e, ss=s):
        return BallFamily(sys, zz, N, n_max, e, "cover").solve(ss, True).value

    def p(N, n_max, e, ss=s):
        return BallFamily(sys, zz, N, n_max, e, "packing").solve(ss, True).value

    tie = 1 + 1e-12
    assert m(1, 4, eps) <= m(2, 4, eps) * tie
    assert m(1, 4, eps, s + 0.5) <= m(1, 4, eps) * tie
    assert m(1, 4, eps) <= m(1, 4, eps / 2) * tie
    assert p(2, 4, eps) <= p(1, 4, eps) * tie
    assert p(1, 4, eps, s + 0.5) <= p(1, 4, eps) * tie
    for d in (singleton_decomposition(zz), orbit_decomposition(zz)):
        total = math.fsum(BallFamily(sys, part, 1, 4, eps, "cover").solve(s, True).value for part in d.nonempty_parts())
        assert m(1, 4, eps) <= total * tie


def test_non_exact_bounds_bracket_the_optimum():
    rng = random.Random(5)
    table, step = oracles.random_system(rng, 9)
    sys = system(table, step)
    for kind in ("cover", "packing"):
        fam = BallFamily(sys, sys.full(), 1, 3, 1.5, kind)
        for s in (0.0, 0.5, 1.0):
            lo, hi = fam.bounds(s)
            v = fam.solve(s, True).value
            assert lo <= v * (1 + 1e-12) and v <= hi * (1 + 1e-12)


def test_critical_exponent_closed_form():
    c = 0.731
    res = critical_exponent(lambda s: math.exp(5 * (c - s)), 0.0, 3.0, 1e-10)
    assert abs(res.value - c) <= 1e-9 and res.flag is None


def test_critical_exponent_flags():
    low = critical_exponent(lambda s: 0.0, 0.0, 2.0)
    assert low.value == 0.0 and low.flag == "below_threshold"
    high = critical_exponent(lambda s: 5.0, 0.0, 2.0)
    assert high.value == 2.0 and high.flag == "above_threshold"


def test_critical_exponent_rejects_increasing():
    with pytest.raises(ContractError):
        critical_exponent(lambda s: s, 0.0, 2.0)


def test_critical_exponent_against_grid_scan():
    z = CylinderSet.full(FULL2)

    def f(s):
        return cylinder_cover_value(z, s, 1, 10, 1)

    res = critical_exponent(f, 0.0, 3.0, 1e-9)
    grid = np.linspace(0, 3, 30001)
    scan = max(s for s in grid if f(float(s)) >= 1)
    assert abs(res.value - scan) <= 1e-4 + 1e-9


def test_bowen_of_singleton_is_zero():
    sys = system([[0, 1], [1, 0]], [1, 0])
    est = bowen_entropy_estimate(sys, sys.subset([0]), ScaleSchedule(N=1, n_max=6))
    assert est.value == 0


def test_bowen_of_identity_is_zero():
    sys = FiniteSystem(range(4), 1 - np.eye(4), range(4))
    assert bowen_entropy_estimate(sys, None, ScaleSchedule(N=1, n_max=6)).value <= 1e-9


def test_bowen_of_full_shift():
    est = bowen_entropy_estimate(FULL2, None, ScaleSchedule(N=1, n_max=40))
    assert abs(est.value - LOG2) < 1e-6
    lo, hi = est.bracket
    assert lo <= LOG2 <= hi


def test_packing_of_singleton_is_zero():
    sys = system([[0, 1], [1, 0]], [1, 0])
    assert packing_entropy_estimate(sys, sys.subset([1]), ScaleSchedule(N=1, n_max=6)).value <= 1e-9


def test_packing_of_full_shift():
    est = packing_entropy_estimate(FULL2, None, ScaleSchedule(N=1, n_max=40))
    assert abs(est.value - LOG2) < 1e-6


def test_packing_of_fixed_points_with_singleton_parts():
    sys = FiniteSystem(range(3), 1 - np.eye(3), range(3))
    z = sys.full()
    est = packing_entropy_estimate(sys, z, ScaleSchedule(N=1, n_max=6), [singleton_decomposition(z)])
    assert est.value <= 1e-9


def test_decomposition_must_cover():
    sys = FiniteSystem(range(3), 1 - np.eye(3), range(3))
    with pytest.raises(DecompositionError):
        Decomposition((sys.subset([0]), sys.subset([1]))).validate(sys.full())
    with pytest.raises(DecompositionError):
        packing_entropy_estimate(sys, sys.full(), ScaleSchedule(N=1, n_max=4), [[sys.subset([0])]])


def test_increasing_sequence_trivial():
    sys = FiniteSystem(range(2), 1 - np.eye(2), range(2))
    seq = build_increasing_sequence(sys, sys.full(), 0.1, [], ScaleSchedule(N=1, n_max=5))
    assert seq.achieved and [s.members for s in seq.sets] == [frozenset({0, 1})]


def test_increasing_sequence_of_two_fixed_points():
    sys = FiniteSystem(range(2), 1 - np.eye(2), range(2))
    z = sys.full()
    seq = build_increasing_sequence(sys, z, 0.1, [singleton_decomposition(z)], ScaleSchedule(N=1, n_max=5))
    assert seq.achieved
    assert [s.members for s in seq.sets] == [frozenset({0}), frozenset({0, 1})]
    assert seq.estimates == [0.0, 0.0]


def test_increasing_sequence_on_the_full_shift():
    z = CylinderSet.full(FULL2)
    parts = first_symbol_decomposition(z)
    seq = build_increasing_sequence(FULL2, z, 0.01, [Decomposition(tuple(parts))], ScaleSchedule(N=1, n_max=30))
    assert seq.achieved and len(seq.sets) == 2
    assert seq.sets[-1].same_set(z)
    assert all(abs(e - LOG2) < 1e-9 for e in seq.estimates)


def test_increasing_sequence_reports_failure(monkeypatch):
    import dimentropy.caratheodory as car
    from dimentropy.estimates import EntropyEstimate

    monkeypatch.setattr(car, "packing_entropy_estimate", lambda *a, **k: EntropyEstimate("packing", 0.0, [], (0.0, 0.0)))
    z = CylinderSet.full(FULL2)
    seq = build_increasing_sequence(FULL2, z, 0.01, [Decomposition(tuple(first_symbol_decomposition(z)))], ScaleSchedule(N=1, n_max=20))
    assert not seq.achieved and seq.sets == []
    assert seq.reason.startswith("insufficient decompositions")


@pytest.mark.parametrize("spec", [FULL2, GOLDEN, SftSpec.full(3)], ids=lambda s: s.name)
def test_entropy_order(spec):
    sched = ScaleSchedule(N=1, n_max=30)
    for z in [CylinderSet.full(spec)] + first_symbol_decomposition(CylinderSet.full(spec)):
        b = bowen_entropy_estimate(spec, z, sched)
        p = packing_entropy_estimate(spec, z, sched)
        u = capacity_entropy_estimate(spec, z, sched)
        assert b.bracket[0] <= p.bracket[1] and p.bracket[0] <= u.bracket[1]


def test_symbolic_radii_must_be_dyadic():
    with pytest.raises(ValueError):
        bowen_entropy_estimate(FULL2, None, ScaleSchedule(N=1, n_max=10, epsilons=(0.3, 0.2)))


def test_ball_family_rejects_bad_orders():
    sys = system([[0, 1], [1, 0]], [1, 0])
    with pytest.raises(ValueError):
        BallFamily(sys, sys.full(), 3, 2, 1.0, "cover")
    with pytest.raises(ValueError):
        BallFamily(sys, SubsetRef(sys, frozenset()), 1, 2, 1.0, "cover")


def test_scale_for_dyadic_radius():
    assert SymbolicScale.from_radius(0.125).m == 3
