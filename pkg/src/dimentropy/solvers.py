"""Exact branch-and-bound solvers on bitmask set systems.

Three problems appear when the entropy quantities are evaluated at a fixed
scale:

* maximum independent set (largest separated set),
* minimum-weight set cover (spanning sets, Bowen outer measure),
* maximum-weight packing of pairwise-disjoint sets (packing pre-measure).

Sets and adjacency rows are Python ints used as bitmasks.  Every solver is
deterministic: branching follows a fixed order and the incumbent is only
replaced on strict improvement.  Solution values are ``math.fsum`` of the
chosen weights, so two solvers that pick the same multiset of weights report
bit-identical values.
"""

from __future__ import annotations

import math
from typing import Sequence

# Pruning treats values within this relative gap as ties.  Weights are
# exp(-s n) with small integer multiplicities, so distinct optima never sit
# this close together.
REL_TIE = 1e-12


def _low(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def clique_cover_count(adj: Sequence[int], cand: int) -> int:
    """Greedy partition of ``cand`` into cliques of the graph ``adj``.

    The number of cliques bounds the independence number of ``cand`` from
    above.
    """
    count = 0
    while cand:
        v = _low(cand)
        cand &= ~(1 << v)
        grow = adj[v] & cand
        while grow:
            u = _low(grow)
            cand &= ~(1 << u)
            grow &= adj[u]
        count += 1
    return count


def greedy_independent_set(adj: Sequence[int], cand: int | None = None) -> list[int]:
    """Maximal independent set taking vertices in ascending index order."""
    if cand is None:
        cand = (1 << len(adj)) - 1
    chosen = []
    while cand:
        v = _low(cand)
        chosen.append(v)
        cand &= ~adj[v] & ~(1 << v)
    return chosen


def max_independent_set(adj: Sequence[int]) -> list[int]:
    """Lexicographically smallest maximum independent set.

    ``adj[i]`` is the bitmask of neighbours of ``i`` (without ``i`` itself).
    Vertices are branched in ascending order, include-first, so the first
    maximum set reached is the lexicographically smallest one.
    """
    n = len(adj)
    best: list[int] = greedy_independent_set(adj)
    best_len = len(best)
    # The greedy set is the first leaf of the include-first search.
    chosen: list[int] = []

    def search(cand: int) -> None:
        nonlocal best, best_len
        if not cand:
            if len(chosen) > best_len:
                best = list(chosen)
                best_len = len(best)
            return
        if len(chosen) + cand.bit_count() <= best_len:
            return
        if len(chosen) + clique_cover_count(adj, cand) <= best_len:
            return
        v = _low(cand)
        bit = 1 << v
        chosen.append(v)
        search(cand & ~adj[v] & ~bit)
        chosen.pop()
        search(cand & ~bit)

    search((1 << n) - 1)
    return sorted(best)


def _reduce_cover(universe: int, sets: Sequence[int], weights: Sequence[float]) -> list[int]:
    """Indices of sets that survive dedup and dominance for covering ``universe``."""
    order = sorted(range(len(sets)), key=lambda i: (weights[i], -(sets[i] & universe).bit_count(), i))
    kept: list[int] = []
    for i in order:
        s = sets[i] & universe
        if not s:
            continue
        # An earlier kept set is no heavier; if it contains s, s is useless.
        if any((s & ~(sets[j] & universe)) == 0 for j in kept):
            continue
        kept.append(i)
    return kept


def greedy_set_cover(universe: int, sets: Sequence[int], weights: Sequence[float]) -> list[int]:
    """Weighted greedy cover (cheapest cost per newly covered element)."""
    uncovered = universe
    chosen = []
    while uncovered:
        best_i, best_ratio = -1, math.inf
        for i, s in enumerate(sets):
            gain = (s & uncovered).bit_count()
            if gain and weights[i] / gain < best_ratio:
                best_i, best_ratio = i, weights[i] / gain
        if best_i < 0:
            raise ValueError("the candidate sets do not cover the universe")
        chosen.append(best_i)
        uncovered &= ~sets[best_i]
    return chosen


def cover_lower_bound(universe: int, sets: Sequence[int], weights: Sequence[float]) -> float:
    """Fractional bound ``sum_e min_{S ni e} w(S) / |S|`` on the optimal cover."""
    total = []
    for e in _bits(universe):
        bit = 1 << e
        best = math.inf
        for s, w in zip(sets, weights):
            if s & bit:
                best = min(best, w / (s & universe).bit_count())
        if best == math.inf:
            raise ValueError("the candidate sets do not cover the universe")
        total.append(best)
    return math.fsum(total)


def min_weight_set_cover(universe: int, sets: Sequence[int], weights: Sequence[float]) -> tuple[list[int], float]:
    """Exact minimum-weight cover of ``universe`` by ``sets``.

    Returns the chosen indices (sorted) and ``fsum`` of their weights.
    Branches on the uncovered element with the fewest candidate sets.
    """
    if not universe:
        return [], 0.0
    kept = _reduce_cover(universe, sets, weights)
    ks = [sets[i] & universe for i in kept]
    kw = [float(weights[i]) for i in kept]
    if universe & ~_union(ks):
        raise ValueError("the candidate sets do not cover the universe")
    containing: dict[int, list[int]] = {e: [k for k, s in enumerate(ks) if s >> e & 1] for e in _bits(universe)}

    greedy = greedy_set_cover(universe, ks, kw)
    best = sorted(greedy)
    best_val = math.fsum(kw[k] for k in best)
    chosen: list[int] = []

    def bound(unc: int) -> float:
        total = 0.0
        for e in _bits(unc):
            total += min(kw[k] / (ks[k] & unc).bit_count() for k in containing[e])
        return total

    def search(unc: int, cost: float) -> None:
        nonlocal best, best_val
        if not unc:
            val = math.fsum(kw[k] for k in chosen)
            if val < best_val * (1 - REL_TIE):
                best, best_val = sorted(chosen), val
            return
        if cost + bound(unc) >= best_val * (1 - REL_TIE):
            return
        e = min(_bits(unc), key=lambda x: (sum(1 for k in containing[x] if ks[k] & unc), x))
        for k in containing[e]:
            chosen.append(k)
            search(unc & ~ks[k], cost + kw[k])
            chosen.pop()

    search(universe, 0.0)
    return sorted(kept[k] for k in best), best_val


def _union(masks) -> int:
    out = 0
    for m in masks:
        out |= m
    return out


def _reduce_packing(masks: Sequence[int], weights: Sequence[float]) -> list[int]:
    order = sorted(range(len(masks)), key=lambda i: (-weights[i], masks[i].bit_count(), i))
    kept: list[int] = []
    for i in order:
        # A kept item is at least as heavy; if it sits inside item i it can replace it.
        if any((masks[j] & ~masks[i]) == 0 for j in kept):
            continue
        kept.append(i)
    return kept


def greedy_packing(masks: Sequence[int], weights: Sequence[float]) -> list[int]:
    """Heaviest-first maximal packing of pairwise-disjoint sets."""
    used = 0
    chosen = []
    for i in sorted(range(len(masks)), key=lambda i: (-weights[i], masks[i].bit_count(), i)):
        if not masks[i] & used:
            chosen.append(i)
            used |= masks[i]
    return chosen


def packing_upper_bound(masks: Sequence[int], weights: Sequence[float]) -> float:
    """Sum over points of the heaviest set whose lowest element is that point.

    Sets sharing a lowest element pairwise intersect, so at most one of each
    group can be packed.
    """
    heaviest: dict[int, float] = {}
    for m, w in zip(masks, weights):
        if m:
            p = _low(m)
            heaviest[p] = max(heaviest.get(p, 0.0), w)
    return math.fsum(heaviest.values())


def max_weight_packing(masks: Sequence[int], weights: Sequence[float]) -> tuple[list[int], float]:
    """Exact maximum-weight family of pairwise-disjoint nonempty sets."""
    kept = [i for i in _reduce_packing(masks, weights) if masks[i]]
    km = [masks[i] for i in kept]
    kw = [float(weights[i]) for i in kept]
    n = len(kept)
    conflict = [0] * n
    for a in range(n):
        for b in range(a + 1, n):
            if km[a] & km[b]:
                conflict[a] |= 1 << b
                conflict[b] |= 1 << a
    greedy = greedy_packing(km, kw)
    best = sorted(greedy)
    best_val = math.fsum(kw[k] for k in best)
    chosen: list[int] = []

    def bound(cand: int) -> float:
        heaviest: dict[int, float] = {}
        for k in _bits(cand):
            p = _low(km[k])
            if kw[k] > heaviest.get(p, -1.0):
                heaviest[p] = kw[k]
        return sum(heaviest.values())

    def search(cand: int, value: float) -> None:
        nonlocal best, best_val
        if not cand:
            val = math.fsum(kw[k] for k in chosen)
            if val > best_val * (1 + REL_TIE):
                best, best_val = sorted(chosen), val
            return
        if value + bound(cand) <= best_val * (1 + REL_TIE):
            return
        k = _low(cand)
        bit = 1 << k
        chosen.append(k)
        search(cand & ~conflict[k] & ~bit, value + kw[k])
        chosen.pop()
        search(cand & ~bit, value)

    search((1 << n) - 1, 0.0)
    return sorted(kept[k] for k in best), best_val
