"""Bowen outer measure, packing pre-measure, critical exponents and the h^B / h^P estimators.

At a fixed scale ``(N, n_max, eps)``

* ``M^s_{N,eps}(Z)`` is the cheapest cover of ``Z`` by open Bowen balls
  ``B_n(x, eps)`` (``x`` anywhere, ``N <= n <= n_max``), each costing
  ``exp(-s n)``;
* ``P^s_{N,eps}(Z)`` is the heaviest family of pairwise-disjoint closed balls
  centred in ``Z``.

Both are nonincreasing in ``s``; the entropies are the values of ``s`` where
they drop through 1.  Finite orders bias these crossings by roughly
``c / order``, so the estimators evaluate a short ladder of truncations and
extrapolate linearly in the reciprocal order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .capacity import capacity_entropy_estimate
from .core import BowenBallSpec, FiniteSystem, SubsetRef, bowen_within
from .errors import ContractError, DecompositionError
from .estimates import EntropyEstimate, ScaleSchedule, extrapolate_in_order, parallel_map
from .metrics import open_radius
from .solvers import (
    REL_TIE,
    cover_lower_bound,
    greedy_packing,
    greedy_set_cover,
    max_weight_packing,
    min_weight_set_cover,
    packing_upper_bound,
)


@dataclass
class CoverSolution:
    """A cover of ``Z`` by open Bowen balls and its weight ``sum exp(-s n_i)``.

    On the symbolic track balls are cylinders and only ``order_counts`` is
    filled in.
    """

    balls: list[BowenBallSpec]
    value: float
    optimal: bool
    s: float
    N: int
    n_max: int
    epsilon: float
    order_counts: dict[int, int] = field(default_factory=dict)

    def to_dict(self, names: Sequence | None = None) -> dict:
        return _solution_dict(self, names)


@dataclass
class PackingSolution:
    """Pairwise-disjoint closed Bowen balls centred in ``Z`` and their weight."""

    balls: list[BowenBallSpec]
    value: float
    optimal: bool
    s: float
    N: int
    n_max: int
    epsilon: float
    order_counts: dict[int, int] = field(default_factory=dict)

    def to_dict(self, names: Sequence | None = None) -> dict:
        return _solution_dict(self, names)


def _solution_dict(sol, names) -> dict:
    label = (lambda i: names[i]) if names is not None else (lambda i: i)
    return {
        "value": sol.value,
        "optimal": sol.optimal,
        "s": sol.s,
        "N": sol.N,
        "n_max": sol.n_max,
        "epsilon": sol.epsilon,
        "balls": [{"center": label(b.center), "order": b.order, "radius": b.radius, "closed": b.closed} for b in sol.balls],
        "order_counts": {str(k): v for k, v in sorted(sol.order_counts.items())},
    }


def _counts(balls: Sequence[BowenBallSpec]) -> dict[int, int]:
    out: dict[int, int] = {}
    for b in balls:
        out[b.order] = out.get(b.order, 0) + 1
    return dict(sorted(out.items()))


def _mask_rows(block: np.ndarray) -> list[int]:
    packed = np.packbits(block, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


class BallFamily:
    """All candidate Bowen balls at a fixed ``(N, n_max, eps)`` as bitmasks.

    ``kind="cover"``: open balls centred anywhere, as subsets of ``Z``.
    ``kind="packing"``: closed balls centred in ``Z``, as subsets of the
    whole system (disjointness is a property of the balls themselves).
    Identical balls of different orders are kept: the solvers pick the
    best order among them.
    """

    def __init__(self, sys: FiniteSystem, z: SubsetRef, N: int, n_max: int, eps: float, kind: str):
        if not len(z):
            raise ValueError("subset must be nonempty")
        if not 1 <= N <= n_max:
            raise ValueError(f"need 1 <= N <= n_max, got N={N}, n_max={n_max}")
        self.sys, self.z, self.N, self.n_max, self.eps, self.kind = sys, z, N, n_max, eps, kind
        zi = z.indices()
        every = np.arange(len(sys))
        self.specs: list[BowenBallSpec] = []
        self.masks: list[int] = []
        self.orders: list[int] = []
        if kind == "cover":
            centers, targets, r, closed = every, zi, open_radius(eps), False
            self.universe = (1 << len(zi)) - 1
        elif kind == "packing":
            centers, targets, r, closed = zi, every, eps, True
            self.universe = (1 << len(sys)) - 1
        else:
            raise ValueError(f"unknown ball family kind {kind!r}")
        rows = {n: _mask_rows(bowen_within(sys, centers, targets, n, r)) for n in range(N, n_max + 1)}
        for ci, c in enumerate(centers):
            for n in range(N, n_max + 1):
                m = rows[n][ci]
                if m:
                    self.specs.append(BowenBallSpec(int(c), n, eps, closed))
                    self.masks.append(m)
                    self.orders.append(n)
        self._order_counts: dict[int, int] | None = None

    def weights(self, s: float) -> list[float]:
        table = {n: math.exp(-s * n) for n in range(self.N, self.n_max + 1)}
        return [table[n] for n in self.orders]

    def solve(self, s: float, exact: bool):
        w = self.weights(s)
        if self.kind == "cover":
            if exact:
                chosen, value = min_weight_set_cover(self.universe, self.masks, w)
            else:
                chosen = sorted(greedy_set_cover(self.universe, self.masks, w))
                value = math.fsum(w[i] for i in chosen)
            balls = [self.specs[i] for i in chosen]
            return CoverSolution(balls, value, exact, s, self.N, self.n_max, self.eps, _counts(balls))
        if exact:
            chosen, value = max_weight_packing(self.masks, w)
        else:
            chosen = sorted(greedy_packing(self.masks, w))
            value = math.fsum(w[i] for i in chosen)
        balls = [self.specs[i] for i in chosen]
        return PackingSolution(balls, value, exact, s, self.N, self.n_max, self.eps, _counts(balls))

    def _per_order_counts(self) -> dict[int, int]:
        """Greedy single-order cover (or packing) sizes, fixed once per family."""
        if self._order_counts is None:
            out = {}
            for n in range(self.N, self.n_max + 1):
                ms = [m for m, o in zip(self.masks, self.orders) if o == n]
                if self.kind == "cover":
                    out[n] = len(greedy_set_cover(self.universe, ms, [1.0] * len(ms)))
                else:
                    out[n] = len(greedy_packing(ms, [1.0] * len(ms)))
            self._order_counts = out
        return self._order_counts

    def bounds(self, s: float) -> tuple[float, float]:
        """Lower and upper bounds on the optimum that are both nonincreasing in ``s``."""
        w = self.weights(s)
        fixed = [c * math.exp(-s * n) for n, c in self._per_order_counts().items()]
        if self.kind == "cover":
            return cover_lower_bound(self.universe, self.masks, w), min(fixed)
        return max(fixed), packing_upper_bound(self.masks, w)


def _exact_ok(z: SubsetRef, sched: ScaleSchedule) -> bool:
    return len(z) <= sched.exact_cap


def bowen_outer_measure(sys: FiniteSystem, z: SubsetRef, s: float, sched: ScaleSchedule, eps: float | None = None) -> CoverSolution:
    """``M^s_{N,eps}(Z)`` over open balls of order ``N..n_max`` centred anywhere.

    Exact below ``sched.exact_cap`` points of ``Z``, otherwise a greedy cover
    with ``optimal=False``.  The value is the optimum of the truncated
    problem, so it bounds the untruncated infimum from above only.
    """
    eps = sched.epsilons[0] if eps is None else eps
    fam = BallFamily(sys, z, sched.N, sched.n_max, eps, "cover")
    return fam.solve(s, _exact_ok(z, sched))


def packing_premeasure(sys: FiniteSystem, z: SubsetRef, s: float, sched: ScaleSchedule, eps: float | None = None) -> PackingSolution:
    """``P^s_{N,eps}(Z)`` over closed balls of order ``N..n_max`` centred in ``Z``."""
    eps = sched.epsilons[0] if eps is None else eps
    fam = BallFamily(sys, z, sched.N, sched.n_max, eps, "packing")
    return fam.solve(s, _exact_ok(z, sched))


@dataclass(frozen=True)
class CriticalExponent:
    """Where an evaluator crosses 1; ``flag`` is set when it never does in range."""

    value: float
    value_at_crossing: float
    flag: str | None
    evaluations: int


def critical_exponent(
    evaluator: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-9,
    *,
    probes: int = 9,
) -> CriticalExponent:
    """Largest ``s`` (to within ``tol``) with ``evaluator(s) >= 1``.

    The evaluator is first sampled on ``probes`` evenly spaced points and must
    be nonincreasing there; otherwise :class:`ContractError` is raised.  If it
    is below 1 already at ``lo`` the result is ``lo`` with flag
    ``"below_threshold"``; if it is still at least 1 at ``hi`` the result is
    ``hi`` with flag ``"above_threshold"``.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    grid = np.linspace(lo, hi, max(probes, 2))
    vals = [float(evaluator(float(s))) for s in grid]
    for (s0, v0), (s1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if v1 > v0 * (1 + REL_TIE) + 1e-300:
            raise ContractError(f"evaluator increases between s={s0:g} ({v0!r}) and s={s1:g} ({v1!r})")
    count = len(vals)
    if vals[0] < 1.0:
        return CriticalExponent(float(lo), vals[0], "below_threshold", count)
    if vals[-1] >= 1.0:
        return CriticalExponent(float(hi), vals[-1], "above_threshold", count)
    i = max(k for k, v in enumerate(vals) if v >= 1.0)
    a, b, fa = float(grid[i]), float(grid[i + 1]), vals[i]
    while b - a > tol:
        mid = (a + b) / 2
        v = float(evaluator(mid))
        count += 1
        if v >= 1.0:
            a, fa = mid, v
        else:
            b = mid
    return CriticalExponent(a, fa, None, count)


@dataclass(frozen=True)
class Decomposition:
    """Finitely many parts whose union is the target set."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise DecompositionError("a decomposition needs at least one part")

    def validate(self, z) -> None:
        from .symbolic import CylinderSet

        if isinstance(z, CylinderSet):
            union = self.parts[0]
            for p in self.parts[1:]:
                union = union.union(p)
            if not union.same_set(z):
                raise DecompositionError("the parts do not union to the target cylinder set")
            return
        members: set = set()
        for p in self.parts:
            if p.system is not z.system:
                raise DecompositionError("a part belongs to a different system")
            members |= p.members
        if members != set(z.members):
            extra, missing = sorted(members - z.members), sorted(set(z.members) - members)
            raise DecompositionError(f"the parts do not union to the target: extra {extra[:5]}, missing {missing[:5]}")

    def nonempty_parts(self) -> list:
        from .symbolic import CylinderSet

        return [p for p in self.parts if not (p.is_empty() if isinstance(p, CylinderSet) else len(p) == 0)]


def singleton_decomposition(z: SubsetRef) -> Decomposition:
    return Decomposition(tuple(SubsetRef(z.system, frozenset([i])) for i in sorted(z.members)))


def orbit_decomposition(z: SubsetRef) -> Decomposition:
    """Split ``Z`` along the connected components of the map's functional graph."""
    sys = z.system
    parent = list(range(len(sys)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in enumerate(sys.step):
        a, b = find(i), find(int(j))
        if a != b:
            parent[max(a, b)] = min(a, b)
    comps: dict[int, set] = {}
    for i in sorted(z.members):
        comps.setdefault(find(i), set()).add(i)
    return Decomposition(tuple(SubsetRef(sys, frozenset(c)) for _, c in sorted(comps.items())))


# --- estimators -------------------------------------------------------------


def _is_symbolic(target) -> bool:
    from .symbolic import SftSpec

    return isinstance(target, SftSpec)


def _default_z(target, z):
    from .symbolic import CylinderSet

    if z is None:
        return CylinderSet.full(target) if _is_symbolic(target) else target.full()
    if _is_symbolic(target):
        if z.is_empty():
            raise ValueError("cylinder set is empty")
    elif not len(z):
        raise ValueError("subset must be nonempty")
    return z


def _s_range(target, sched: ScaleSchedule, kind: str, z, N: int, eps: float) -> tuple[float, float]:
    if sched.s_hi is not None:
        return sched.s_lo, sched.s_hi
    if _is_symbolic(target):
        from .symbolic import SymbolicScale

        m = SymbolicScale.from_radius(eps).m
        hi = math.log(max(target.k, 2)) * (1 + m / N) + 1.0
    elif kind == "cover":
        hi = math.log(max(len(z), 2)) / N + 1.0
    else:
        hi = math.log(max(len(target), 2)) / N + 1.0
    return sched.s_lo, max(hi, sched.s_lo + 1.0)


@dataclass
class _Crossing:
    s: float
    lower: float
    upper: float
    value_at_crossing: float
    optimal: bool
    flag: str | None


def _crossings(evaluators, lo, hi, tol) -> _Crossing:
    """Crossing of the point evaluator and of its certified lower/upper evaluators."""
    point, low, high, optimal = evaluators
    c = critical_exponent(point, lo, hi, tol)
    if optimal:
        return _Crossing(c.value, c.value, c.value, c.value_at_crossing, True, c.flag)
    cl = critical_exponent(low, lo, hi, tol)
    cu = critical_exponent(high, lo, hi, tol)
    return _Crossing(c.value, min(cl.value, c.value), max(cu.value, c.value), c.value_at_crossing, False, c.flag or cl.flag or cu.flag)


def _cover_evaluators(target, z, N: int, n_top: int, eps: float, sched: ScaleSchedule):
    if _is_symbolic(target):
        from .symbolic import SymbolicScale, cylinder_cover_value

        m = SymbolicScale.from_radius(eps).m

        def f(s):
            return cylinder_cover_value(z, s, N, n_top, m)

        return f, f, f, True
    fam = BallFamily(target, z, N, n_top, eps, "cover")
    exact = _exact_ok(z, sched)
    point = lambda s: fam.solve(s, exact).value  # noqa: E731
    if exact:
        return point, point, point, True
    return (lambda s: fam.bounds(s)[1]), (lambda s: fam.bounds(s)[0]), (lambda s: fam.bounds(s)[1]), False


def _packing_evaluators(target, decomps: list[Decomposition], N: int, n_top: int, eps: float, sched: ScaleSchedule):
    """Evaluators of ``min over decompositions of sum over parts of P^s``."""
    if _is_symbolic(target):
        from .symbolic import SymbolicScale, cylinder_packing_value

        m = SymbolicScale.from_radius(eps).m

        def f(s):
            return min(math.fsum(cylinder_packing_value(p, s, N, n_top, m) for p in d.nonempty_parts()) for d in decomps)

        return f, f, f, True
    fams = [[(BallFamily(target, p, N, n_top, eps, "packing"), _exact_ok(p, sched)) for p in d.nonempty_parts()] for d in decomps]
    exact = all(ok for parts in fams for _, ok in parts)

    def point(s):
        return min(math.fsum(f.solve(s, ok).value for f, ok in parts) for parts in fams)

    if exact:
        return point, point, point, True

    def low(s):
        return min(math.fsum(f.solve(s, True).value if ok else f.bounds(s)[0] for f, ok in parts) for parts in fams)

    def high(s):
        return min(math.fsum(f.solve(s, True).value if ok else f.bounds(s)[1] for f, ok in parts) for parts in fams)

    return low, low, high, False


def _ladder_estimate(kind: str, target, z, sched: ScaleSchedule, make_evaluators, ladder: list[int], ladder_is_top: bool):
    per_eps, rows, notes = [], [], []
    bracket = (0.0, 0.0)

    def run(task):
        eps, level = task
        N, top = (sched.N, level) if ladder_is_top else (level, sched.n_max)
        lo, hi = _s_range(target, sched, "cover" if ladder_is_top else "packing", z, N, eps)
        return _crossings(make_evaluators(N, top, eps), lo, hi, sched.tol)

    grid = [(eps, level) for eps in sched.epsilons for level in ladder]
    results = dict(zip(grid, parallel_map(run, grid, sched.threads)))
    for eps in sched.epsilons:
        cs = [results[(eps, level)] for level in ladder]
        for level, c in zip(ladder, cs):
            N, top = (sched.N, level) if ladder_is_top else (level, sched.n_max)
            rows.append(
                {
                    "epsilon": eps,
                    "N": N,
                    "n_max": top,
                    "s_critical": c.s,
                    "s_lower": c.lower,
                    "s_upper": c.upper,
                    "value_at_crossing": c.value_at_crossing,
                    "optimal_flag": c.optimal,
                    "flag": c.flag,
                }
            )
        inter, resid = extrapolate_in_order(ladder, [c.s for c in cs])
        inter_lo = extrapolate_in_order(ladder, [c.lower for c in cs])[0]
        inter_hi = extrapolate_in_order(ladder, [c.upper for c in cs])[0]
        raw = cs[-1]
        value = max(0.0, inter)
        lo = max(0.0, min(inter_lo, inter, raw.lower) - resid - sched.tol)
        hi = max(inter_hi, inter, raw.upper, value) + resid + sched.tol
        per_eps.append((eps, value))
        bracket = (lo, hi)
        notes.append(
            {
                "epsilon": eps,
                "extrapolated": inter,
                "extrapolation_residual": resid,
                "finest_truncation_crossing": raw.s,
                "bracket": [lo, hi],
                "optimal": all(c.optimal for c in cs),
            }
        )
    diagnostics = {
        "track": "symbolic" if _is_symbolic(target) else "finite",
        "ladder": ladder,
        "ladder_varies": "n_max" if ladder_is_top else "N",
        "per_epsilon": notes,
        "optimal": all(r["optimal_flag"] for r in rows),
        "schedule": sched.to_dict(),
    }
    return EntropyEstimate(kind, per_eps[-1][1], per_eps, bracket, diagnostics, rows)


def bowen_entropy_estimate(target, z=None, sched: ScaleSchedule | None = None) -> EntropyEstimate:
    """Estimate ``h^B(Z)``.

    For each radius the crossing of ``s -> M^s_{N,eps}(Z)`` is computed with
    the ball orders truncated at each level of ``sched.bowen_ladder()``; the
    crossings are extrapolated linearly in ``1 / n_max`` to remove the
    truncation bias.  The bracket spans the extrapolated value, the raw
    crossing at the finest truncation and any greedy/exact gap.
    """
    sched = sched or ScaleSchedule()
    z = _default_z(target, z)
    return _ladder_estimate(
        "bowen",
        target,
        z,
        sched,
        lambda N, top, eps: _cover_evaluators(target, z, N, top, eps, sched),
        sched.bowen_ladder(),
        True,
    )


def _with_trivial(z, decomps) -> list[Decomposition]:
    out = [Decomposition((z,))]
    for d in decomps or []:
        d = d if isinstance(d, Decomposition) else Decomposition(tuple(d))
        d.validate(z)
        out.append(d)
    return out


def packing_entropy_estimate(target, z=None, sched: ScaleSchedule | None = None, decomps: Sequence | None = None) -> EntropyEstimate:
    """Estimate ``h^P(Z)`` two ways and report the smaller.

    (a) the crossing of ``s -> min_decomp sum_parts P^s_{N,eps}(part)``,
    extrapolated over ``sched.packing_ladder()`` in ``1 / N``;
    (b) ``min_decomp max_parts`` of the capacity estimate of the parts.

    The trivial decomposition ``{Z}`` is always included.
    """
    sched = sched or ScaleSchedule()
    z = _default_z(target, z)
    ds = _with_trivial(z, decomps)
    est = _ladder_estimate(
        "packing",
        target,
        z,
        sched,
        lambda N, top, eps: _packing_evaluators(target, ds, N, top, eps, sched),
        sched.packing_ladder(),
        False,
    )
    cap_value, cap_bracket, cap_note = None, None, None
    try:
        best = None
        for d in ds:
            caps = [capacity_entropy_estimate(target, p, sched) for p in d.nonempty_parts()]
            worst = max(caps, key=lambda e: e.value)
            if best is None or worst.value < best.value:
                best = worst
        cap_value, cap_bracket = best.value, best.bracket
    except ValueError as exc:
        cap_note = f"capacity cross-check skipped: {exc}"
    a_value, (a_lo, a_hi) = est.value, est.bracket
    value, lo, hi = a_value, a_lo, a_hi
    if cap_value is not None:
        value = min(a_value, cap_value)
        lo = min(a_lo, cap_bracket[0], value)
        hi = max(a_hi, cap_bracket[1])
    per_eps = est.per_epsilon
    monotone = all(b[1] >= a[1] - sched.tol for a, b in zip(per_eps, per_eps[1:]))
    diagnostics = dict(est.diagnostics)
    diagnostics.update(
        {
            "premeasure_estimate": a_value,
            "premeasure_bracket": [a_lo, a_hi],
            "capacity_of_parts_estimate": cap_value,
            "capacity_of_parts_bracket": list(cap_bracket) if cap_bracket else None,
            "decompositions": len(ds),
            "monotone_in_epsilon": monotone,
        }
    )
    if cap_note:
        diagnostics["note"] = cap_note
    return EntropyEstimate("packing", value, per_eps, (lo, hi), diagnostics, est.scales)


@dataclass
class IncreasingSequence:
    """Result of :func:`build_increasing_sequence`."""

    achieved: bool
    sets: list
    estimates: list[float]
    packing: float
    bound: float
    reason: str = ""


def build_increasing_sequence(target, z, target_eps: float, decomps: Sequence, sched: ScaleSchedule | None = None) -> IncreasingSequence:
    """Nested sets ``A_1 <= A_2 <= ...`` ending at ``Z`` with small capacity entropy.

    Tries each supplied decomposition in turn (the trivial one last) and
    takes cumulative unions of its parts.  The result is achieved when every
    ``A_i`` has capacity estimate at most ``h^P(Z) + target_eps``; the max
    rule for unions is checked as well as the direct estimate.
    """
    sched = sched or ScaleSchedule()
    z = _default_z(target, z)
    if target_eps <= 0:
        raise ValueError("target_eps must be positive")
    ds = _with_trivial(z, decomps)
    packing = packing_entropy_estimate(target, z, sched, [d.parts for d in ds[1:]]).value
    bound = packing + target_eps
    best_gap = math.inf
    for d in ds[1:] + ds[:1]:
        parts = d.nonempty_parts()
        part_caps = [capacity_entropy_estimate(target, p, sched).value for p in parts]
        if max(part_caps) > bound:
            best_gap = min(best_gap, max(part_caps) - bound)
            continue
        sets, estimates = [], []
        acc = None
        for p in parts:
            acc = p if acc is None else _union(acc, p)
            sets.append(acc)
            estimates.append(capacity_entropy_estimate(target, acc, sched).value)
        if max(estimates) <= bound:
            return IncreasingSequence(True, sets, estimates, packing, bound)
        best_gap = min(best_gap, max(estimates) - bound)
    return IncreasingSequence(
        False,
        [],
        [],
        packing,
        bound,
        f"insufficient decompositions: the best one exceeds h^P + eps = {bound:.6g} by {best_gap:.6g}",
    )


def _union(a, b):
    from .core import union_subset
    from .symbolic import CylinderSet

    return a.union(b) if isinstance(a, CylinderSet) else union_subset(a, b)
