"""Brute-force reference values built from plain Python only.

Nothing here imports the package: systems are a distance table (list of
lists) plus a step list, and every quantity is found by exhaustive search.
"""

from __future__ import annotations

import itertools
import math
import random


def orbit(step, x, n):
    out = [x]
    for _ in range(n - 1):
        out.append(step[out[-1]])
    return out


def dn(table, step, x, y, n):
    return max(table[a][b] for a, b in zip(orbit(step, x, n), orbit(step, y, n)))


def max_separated(table, step, z, n, eps):
    z = sorted(z)
    for size in range(len(z), 0, -1):
        for combo in itertools.combinations(z, size):
            if all(dn(table, step, a, b, n) > eps for a, b in itertools.combinations(combo, 2)):
                return size
    return 0


def min_spanning(table, step, z, n, eps):
    everything = range(len(table))
    for size in range(1, len(table) + 1):
        for centers in itertools.combinations(everything, size):
            if all(any(dn(table, step, c, y, n) <= eps for c in centers) for y in z):
                return size
    raise AssertionError("the whole space always spans")


def cover_value(table, step, z, s, N, n_max, eps):
    """Cheapest family of open balls (any centre, order in [N, n_max]) covering z.

    Exhaustive over subsets of z: best[S] is the cheapest family covering S.
    """
    z = sorted(z)
    pos = {y: i for i, y in enumerate(z)}
    balls = []
    for c in range(len(table)):
        for k in range(N, n_max + 1):
            mask = sum(1 << pos[y] for y in z if dn(table, step, c, y, k) < eps)
            if mask:
                balls.append((mask, k))
    full = (1 << len(z)) - 1
    best = {0: ()}
    # breadth over masks in increasing popcount so every sub-mask is settled first
    for mask in sorted(range(1, full + 1), key=lambda m: bin(m).count("1")):
        low = mask & -mask
        options = []
        for bm, k in balls:
            if bm & low:
                rest = mask & ~bm
                options.append(best[rest] + (k,))
        best[mask] = min(options, key=lambda ks: (math.fsum(math.exp(-s * k) for k in ks), sorted(ks)))
    return math.fsum(math.exp(-s * k) for k in best[full]), sorted(best[full])


def packing_value(table, step, z, s, N, n_max, eps):
    """Heaviest family of pairwise disjoint closed balls centred in z, enumerating every family."""
    z = sorted(z)
    balls = []
    for c in z:
        for k in range(N, n_max + 1):
            members = frozenset(y for y in range(len(table)) if dn(table, step, c, y, k) <= eps)
            balls.append((members, k))
    best = [0.0, []]

    def extend(start, used, orders):
        v = math.fsum(math.exp(-s * k) for k in orders)
        if v > best[0]:
            best[0], best[1] = v, sorted(orders)
        for i in range(start, len(balls)):
            members, k = balls[i]
            if not members & used:
                extend(i + 1, used | members, orders + [k])

    extend(0, frozenset(), [])
    return best[0], best[1]


def words(alphabet_size, forbidden, n):
    """All words of length n over range(alphabet_size) avoiding the forbidden words."""
    out = []
    for w in itertools.product(range(alphabet_size), repeat=n):
        text = tuple(w)
        if not any(
            text[i : i + len(f)] == tuple(f) for f in forbidden for i in range(len(text) - len(f) + 1)
        ):
            out.append(text)
    return out


def random_system(rng: random.Random, k: int, grid: int = 4):
    """Chebyshev distances of k random integer points, and a random map."""
    cells = rng.sample([(x, y) for x in range(grid) for y in range(grid)], k)
    table = [[float(max(abs(a[0] - b[0]), abs(a[1] - b[1]))) for b in cells] for a in cells]
    step = [rng.randrange(k) for _ in range(k)]
    return table, step


def words_by_extension(alphabet_size, forbidden, n):
    """Admissible words of every length up to n, grown one symbol at a time.

    Entry k lists the length-k words; a word is kept when no forbidden word
    ends at its last position.
    """
    forbidden = [tuple(f) for f in forbidden]
    levels = [[()]]
    for _ in range(n):
        nxt = []
        for w in levels[-1]:
            for a in range(alphabet_size):
                v = w + (a,)
                if not any(len(f) <= len(v) and v[len(v) - len(f) :] == f for f in forbidden):
                    nxt.append(v)
        levels.append(nxt)
    return levels
