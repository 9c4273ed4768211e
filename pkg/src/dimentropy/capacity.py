"""Separated and spanning sets, ``r_n`` / ``r~_n`` and the upper capacity entropy.

A set is ``(n, eps)``-separated when all pairs satisfy ``d_n > eps`` and
``(n, eps)``-spanning for ``Z`` when every point of ``Z`` lies within
``d_n <= eps`` of a member.  ``r_n`` is the largest separated size,
``r~_n`` the smallest spanning size (centres anywhere in the space).

Exact solvers work below a size cap.  Large systems go through
:func:`separated_bounds`, which splits ``Z`` into groups that cannot
conflict with each other and solves or brackets each group separately.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import FiniteSystem, SubsetRef, bowen_matrix, bowen_paired, bowen_within
from .errors import ResourceCapError
from .estimates import EntropyEstimate, ScaleSchedule, fit_line, parallel_map
from .solvers import clique_cover_count, max_independent_set, min_weight_set_cover

EXACT_CAP = 64


@dataclass(frozen=True)
class SeparationCertificate:
    """A separated or spanning set at order ``n`` and radius ``epsilon``."""

    kind: str
    points: tuple[int, ...]
    n: int
    epsilon: float
    optimal: bool

    def __post_init__(self):
        if self.kind not in ("separated", "spanning"):
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["points"] = list(self.points)
        return d


def is_separated(sys: FiniteSystem, points, n: int, eps: float) -> bool:
    pts = np.asarray(list(points), dtype=np.int64)
    if len(pts) < 2:
        return True
    d = bowen_matrix(sys, pts, pts, n)
    np.fill_diagonal(d, np.inf)
    return bool((d > eps).all())


def is_spanning(sys: FiniteSystem, z: SubsetRef, points, n: int, eps: float) -> bool:
    pts = np.asarray(list(points), dtype=np.int64)
    if not len(z):
        return True
    if not len(pts):
        return False
    d = bowen_matrix(sys, z.indices(), pts, n)
    return bool((d.min(axis=1) <= eps).all())


def _nonempty(z: SubsetRef) -> None:
    if not len(z):
        raise ValueError("subset must be nonempty")


def _greedy_dense(conflict: np.ndarray) -> list[int]:
    """Ascending-index greedy on a boolean conflict matrix with true diagonal."""
    alive = np.ones(conflict.shape[0], dtype=bool)
    chosen = []
    for i in range(conflict.shape[0]):
        if alive[i]:
            chosen.append(i)
            alive &= ~conflict[i]
    return chosen


def _greedy_stream(sys: FiniteSystem, members: np.ndarray, n: int, r: float, block: int = 512) -> np.ndarray:
    """Points kept by scanning ``members`` in order and keeping those at ``d_n > r`` from all kept."""
    kept = np.empty(0, dtype=np.int64)
    for start in range(0, len(members), block):
        cand = members[start : start + block]
        if len(kept):
            cand = cand[(~bowen_within(sys, cand, kept, n, r)).all(axis=1)]
        if not len(cand):
            continue
        sel = _greedy_dense(bowen_within(sys, cand, cand, n, r))
        kept = np.concatenate([kept, cand[sel]])
    return kept


def _masks(conflict: np.ndarray) -> list[int]:
    """Bitmask adjacency rows (diagonal removed) of a boolean matrix."""
    c = conflict.copy()
    np.fill_diagonal(c, False)
    packed = np.packbits(c, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def greedy_separated(sys: FiniteSystem, z: SubsetRef, n: int, eps: float) -> SeparationCertificate:
    """Maximal separated subset of ``z`` built in ascending index order.

    Maximality makes it an ``(n, eps)``-spanning set of ``z`` as well.
    """
    _nonempty(z)
    kept = _greedy_stream(sys, z.indices(), n, eps)
    return SeparationCertificate("separated", tuple(kept), n, eps, False)


def max_separated_exact(sys: FiniteSystem, z: SubsetRef, n: int, eps: float, *, cap: int = EXACT_CAP) -> SeparationCertificate:
    """Largest separated subset of ``z`` (lexicographically smallest among the largest)."""
    _nonempty(z)
    if len(z) > cap:
        raise ResourceCapError(
            f"exact separated search on {len(z)} points exceeds the cap of {cap}; use separated_bounds", size=len(z), cap=cap
        )
    idx = z.indices()
    chosen = max_independent_set(_masks(bowen_within(sys, idx, idx, n, eps)))
    return SeparationCertificate("separated", tuple(idx[chosen]), n, eps, True)


def min_spanning_exact(sys: FiniteSystem, z: SubsetRef, n: int, eps: float, *, cap: int = EXACT_CAP) -> SeparationCertificate:
    """Smallest spanning set of ``z`` with centres anywhere in the system."""
    _nonempty(z)
    if len(sys) > cap:
        raise ResourceCapError(f"exact spanning search over {len(sys)} centres exceeds the cap of {cap}", size=len(sys), cap=cap)
    idx = z.indices()
    within = bowen_within(sys, np.arange(len(sys)), idx, n, eps)
    sets = [int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little") for row in within]
    chosen, _ = min_weight_set_cover((1 << len(idx)) - 1, sets, [1.0] * len(sets))
    return SeparationCertificate("spanning", tuple(chosen), n, eps, True)


@dataclass(frozen=True)
class SeparatedBounds:
    """``lower <= r_n(Z, eps) <= upper``; ``points`` is a maximal separated set of size ``lower``."""

    n: int
    epsilon: float
    lower: int
    upper: int
    exact: bool
    points: tuple[int, ...]


def conflict_groups(sys: FiniteSystem, idx: np.ndarray, n: int, eps: float) -> tuple[np.ndarray, bool]:
    """Group ids such that ``d_n(x, y) <= eps`` only within a group.

    The second value is true when every group is known to be a clique, i.e.
    the grouping is exactly the ``d_n <= eps`` relation.
    """
    it = sys.iterates(n)
    cols = []
    exact = True
    for k in range(n):
        uniq, inv = np.unique(it[k, idx], return_inverse=True)
        lab, ex = sys.metric.labels(eps, uniq)
        exact = exact and ex
        cols.append(lab[inv.reshape(-1)])
    _, gid = np.unique(np.stack(cols, axis=1), axis=0, return_inverse=True)
    return gid.reshape(-1), exact


def separated_bounds(
    sys: FiniteSystem,
    z: SubsetRef,
    n: int,
    eps: float,
    *,
    exact_cap: int = EXACT_CAP,
    greedy_cap: int = 4096,
) -> SeparatedBounds:
    """Exact ``r_n(Z, eps)`` when possible, otherwise a certified bracket.

    Groups of at most ``exact_cap`` points are solved exactly; larger groups
    are exact when the conflict relation is a disjoint union of cliques and
    otherwise bracketed by a greedy separated set (below) and the smaller of a
    clique-cover count and a maximal ``eps/2``-separated set (above).
    """
    _nonempty(z)
    idx = z.indices()
    gid, all_cliques = conflict_groups(sys, idx, n, eps)
    order = np.argsort(gid, kind="stable")
    groups = [idx[part] for part in np.split(order, np.flatnonzero(np.diff(gid[order])) + 1)]
    if all_cliques:
        points = sorted(int(m[0]) for m in groups)
        return SeparatedBounds(n, eps, len(points), len(points), True, tuple(points))
    lower = upper = 0
    points: list[int] = []
    small = [m for m in groups if 1 < len(m) <= exact_cap]
    for members, chosen in zip(small, _solve_small_groups(sys, small, n, eps)):
        lower += len(chosen)
        upper += len(chosen)
        points.extend(int(members[c]) for c in chosen)
    for members in groups:
        g = len(members)
        if g == 1 or _is_clique(sys, members, n, eps):
            lower += 1
            upper += 1
            points.append(int(members[0]))
            continue
        if g <= exact_cap:
            continue
        if g > greedy_cap:
            kept = _greedy_stream(sys, members, n, eps)
            lower += len(kept)
            upper += len(_greedy_stream(sys, members, n, eps / 2))
            points.extend(int(p) for p in kept)
            continue
        conflict = bowen_within(sys, members, members, n, eps)
        chosen = _greedy_dense(conflict)
        lower += len(chosen)
        points.extend(int(members[c]) for c in chosen)
        # If the neighbourhoods of the greedy set partition the group into
        # cliques, no separated set can be larger.
        reach = conflict[chosen]
        if (reach.sum(axis=0) == 1).all() and all(conflict[np.ix_(r, r)].all() for r in reach):
            upper += len(chosen)
            continue
        bound = clique_cover_count(_masks(conflict), (1 << g) - 1)
        bound = min(bound, len(_greedy_dense(bowen_within(sys, members, members, n, eps / 2))))
        upper += bound
    return SeparatedBounds(n, eps, lower, upper, lower == upper, tuple(sorted(points)))


def _is_clique(sys: FiniteSystem, members: np.ndarray, n: int, eps: float) -> bool:
    """Whether all pairs of ``members`` satisfy ``d_n <= eps`` (via orbit-image diameters)."""
    if len(members) > EXACT_CAP:
        it = sys.iterates(n)
        return all(sys.metric.diameter(np.unique(it[k, members])) <= eps for k in range(n))
    return False


def _solve_small_groups(sys: FiniteSystem, groups: list[np.ndarray], n: int, eps: float) -> list[list[int]]:
    """Exact largest separated subsets of many small groups, sharing one vectorised distance pass."""
    if not groups:
        return []
    tri = {g: np.triu_indices(g, 1) for g in {len(m) for m in groups}}
    a = np.concatenate([m[tri[len(m)][0]] for m in groups])
    b = np.concatenate([m[tri[len(m)][1]] for m in groups])
    conf = np.concatenate(
        [bowen_paired(sys, a[s : s + (1 << 20)], b[s : s + (1 << 20)], n) <= eps for s in range(0, len(a), 1 << 20)]
    )
    out = []
    offset = 0
    for m in groups:
        iu, ju = tri[len(m)]
        c = conf[offset : offset + len(iu)]
        offset += len(iu)
        if c.all():
            out.append([0])
        elif not c.any():
            out.append(list(range(len(m))))
        else:
            adj = [0] * len(m)
            for i, j in zip(iu[c].tolist(), ju[c].tolist()):
                adj[i] |= 1 << j
                adj[j] |= 1 << i
            out.append(max_independent_set(adj))
    return out


@dataclass(frozen=True)
class CapacityRow:
    n: int
    epsilon: float
    r_lower: int
    r_upper: int
    exact_flag: bool
    spanning_count: int
    spanning_exact: bool

    def to_dict(self) -> dict:
        return asdict(self)


def capacity_row(sys: FiniteSystem, z: SubsetRef, n: int, eps: float, schedule: ScaleSchedule) -> CapacityRow:
    b = separated_bounds(sys, z, n, eps, exact_cap=schedule.exact_cap, greedy_cap=schedule.greedy_cap)
    if len(sys) <= schedule.exact_cap:
        span = len(min_spanning_exact(sys, z, n, eps, cap=schedule.exact_cap))
        span_exact = True
    else:
        # A maximal separated set spans.
        span, span_exact = b.lower, False
    return CapacityRow(n, eps, b.lower, b.upper, b.exact, span, span_exact)


def _check_schedule(schedule: ScaleSchedule) -> None:
    if len(schedule.n_values) < 3:
        raise ValueError("capacity estimates need at least 3 orders n per radius")
    if len(schedule.epsilons) < 2:
        raise ValueError("capacity estimates need at least 2 radii")


def capacity_entropy_estimate(target, z=None, schedule: ScaleSchedule | None = None) -> EntropyEstimate:
    """Upper capacity entropy ``h^U(Z)`` from the growth of ``r_n`` in ``n``.

    ``target`` is a :class:`FiniteSystem` (``z`` a :class:`SubsetRef`) or an
    :class:`~dimentropy.symbolic.SftSpec` (``z`` a
    :class:`~dimentropy.symbolic.CylinderSet`); ``z=None`` means the whole
    space.  The final value comes from the smallest radius.
    """
    from .symbolic import SftSpec

    schedule = schedule or ScaleSchedule()
    _check_schedule(schedule)
    if isinstance(target, SftSpec):
        return _symbolic_capacity(target, z, schedule)
    z = target.full() if z is None else z
    _nonempty(z)
    grid = [(eps, n) for eps in schedule.epsilons for n in schedule.n_values]
    rows = parallel_map(lambda t: capacity_row(target, z, t[1], t[0], schedule), grid, schedule.threads)
    per_eps, brackets, notes = [], [], []
    for eps in schedule.epsilons:
        sub = [r for r in rows if r.epsilon == eps]
        ns = [r.n for r in sub]
        lo_slope, _, resid = fit_line(ns, [math.log(r.r_lower) for r in sub])
        hi_slope = fit_line(ns, [math.log(r.r_upper) for r in sub])[0]
        value = max(0.0, lo_slope)
        per_eps.append((eps, value))
        brackets.append((max(0.0, min(lo_slope, hi_slope)), max(value, hi_slope)))
        notes.append(
            {
                "epsilon": eps,
                "slope_lower_counts": lo_slope,
                "slope_upper_counts": hi_slope,
                "fit_residual": resid,
                "exact": all(r.exact_flag for r in sub),
                "degenerate": len({r.r_lower for r in sub}) == 1,
            }
        )
    diagnostics = {
        "track": "finite",
        "per_epsilon": notes,
        "exact": all(r.exact_flag for r in rows),
        "degenerate_fit": notes[-1]["degenerate"],
        "schedule": schedule.to_dict(),
    }
    return EntropyEstimate("capacity", per_eps[-1][1], per_eps, brackets[-1], diagnostics, [r.to_dict() for r in rows])


def _symbolic_capacity(sft, z, schedule: ScaleSchedule) -> EntropyEstimate:
    from .symbolic import CylinderSet, SymbolicScale, sft_entropy_exact, symbolic_separated_count

    cyl = CylinderSet.full(sft) if z is None else z
    if cyl.is_empty():
        raise ValueError("cylinder set is empty")
    rows, per_eps, notes = [], [], []
    bracket = (0.0, 0.0)
    for eps in schedule.epsilons:
        scale = SymbolicScale.from_radius(eps)
        counts = []
        for n in schedule.n_values:
            c = symbolic_separated_count(sft, cyl, n, scale)
            counts.append(c.r)
            rows.append(CapacityRow(n, eps, c.r, c.r, True, c.r_tilde, True).to_dict())
        ratios = [math.log(b / a) for a, b in zip(counts, counts[1:])]
        tail = ratios[-3:]
        value = max(0.0, ratios[-1])
        per_eps.append((eps, value))
        bracket = (max(0.0, min(tail)), max(tail + [value]))
        notes.append(
            {
                "epsilon": eps,
                "m": scale.m,
                "ratio": ratios[-1],
                "ratio_spread": max(tail) - min(tail),
                "slope": fit_line(schedule.n_values, [math.log(c) for c in counts])[0],
                "degenerate": len(set(counts)) == 1,
            }
        )
    diagnostics = {
        "track": "symbolic",
        "per_epsilon": notes,
        "exact": True,
        "degenerate_fit": notes[-1]["degenerate"],
        "schedule": schedule.to_dict(),
    }
    if z is None or cyl.same_set(CylinderSet.full(sft)):
        check = sft_entropy_exact(sft, max(schedule.n_max, 8), tol=schedule.tol)
        diagnostics["whole_space"] = check.diagnostics
    return EntropyEstimate("capacity", per_eps[-1][1], per_eps, bracket, diagnostics, rows)
