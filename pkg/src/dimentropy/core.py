"""Finite dynamical systems, Bowen metrics and Bowen balls.

A :class:`FiniteSystem` is a finite (pseudo)metric space together with a
self-map given as an index table.  Everything in the package evaluates the
dimensional entropies on these objects (or on shifts of finite type, see
:mod:`dimentropy.symbolic`).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import MetricError, ResourceCapError
from .metrics import Metric, ProductMetric, TableMetric, open_radius

PRODUCT_CAP = 1 << 20


def validate_metric_table(table: np.ndarray, names: Sequence[Hashable] | None = None, rtol: float = 1e-12) -> None:
    """Raise :class:`MetricError` unless ``table`` is a pseudometric.

    The triangle inequality is checked with a relative slack of ``rtol`` times
    the largest entry so that tables produced by floating arithmetic pass.
    """
    t = np.asarray(table, dtype=float)
    n = t.shape[0]
    label = (lambda i: repr(names[i])) if names is not None else (lambda i: str(i))
    if not np.all(np.isfinite(t)):
        raise MetricError("distance table contains non-finite entries")
    if (t < 0).any():
        i, j = np.argwhere(t < 0)[0]
        raise MetricError(f"negative distance d({label(i)}, {label(j)}) = {t[i, j]}")
    diag = np.nonzero(np.diag(t) != 0)[0]
    if len(diag):
        i = diag[0]
        raise MetricError(f"d({label(i)}, {label(i)}) = {t[i, i]} is not zero")
    asym = np.argwhere(t != t.T)
    if len(asym):
        i, j = asym[0]
        raise MetricError(f"asymmetric distance: d({label(i)}, {label(j)}) = {t[i, j]} but d({label(j)}, {label(i)}) = {t[j, i]}")
    slack = rtol * max(1.0, float(t.max(initial=0.0)))
    for k in range(n):
        bad = t > t[:, k : k + 1] + t[k : k + 1, :] + slack
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise MetricError(
                f"triangle inequality fails for ({label(i)}, {label(k)}, {label(j)}): "
                f"d({label(i)}, {label(j)}) = {t[i, j]} > d({label(i)}, {label(k)}) + d({label(k)}, {label(j)}) = {t[i, k] + t[k, j]}"
            )


class FiniteSystem:
    """A finite metric space ``points`` with self-map ``step``.

    ``dist`` is either a square table (validated unless ``validate=False``) or
    a :class:`~dimentropy.metrics.Metric` backend.  ``step[i]`` is the index
    of the image of point ``i``.  Instances are immutable; the iterate table is
    memoised behind a lock.
    """

    def __init__(self, points: Iterable[Hashable], dist, step, *, validate: bool = True):
        self.points = tuple(points)
        n = len(self.points)
        if n == 0:
            raise ValueError("a system needs at least one point")
        metric = dist if isinstance(dist, Metric) else TableMetric(dist)
        if metric.size != n:
            raise ValueError(f"metric has {metric.size} points but {n} point names were given")
        s = np.array(step, dtype=np.int64).reshape(-1)
        if s.shape != (n,):
            raise ValueError(f"step table must have one entry per point ({n}), got {s.shape[0]}")
        if n and (s.min() < 0 or s.max() >= n):
            raise ValueError("step table maps outside the point set")
        s.setflags(write=False)
        if validate and isinstance(metric, TableMetric):
            validate_metric_table(metric.values, self.points)
        self.metric = metric
        self.step = s
        self.factors: tuple[FiniteSystem, FiniteSystem] | None = None
        self._lock = threading.Lock()
        self._iter = np.arange(n, dtype=np.int64)[None, :]
        self._index: dict | None = None

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"FiniteSystem({len(self)} points, metric={self.metric.describe()['kind']})"

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def dist(self) -> np.ndarray:
        return self.metric.table()

    def index_of(self, name: Hashable) -> int:
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self.points)}
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown point {name!r}") from None

    def iterates(self, n: int) -> np.ndarray:
        """Array of shape ``(n, N)`` whose row ``k`` is the index map of ``T^k``."""
        if n < 1:
            raise ValueError("order n must be >= 1")
        with self._lock:
            it = self._iter
            if it.shape[0] < n:
                rows = [it]
                last = it[-1]
                for _ in range(n - it.shape[0]):
                    last = self.step[last]
                    rows.append(last[None, :])
                it = np.vstack(rows)
                it.setflags(write=False)
                self._iter = it
        return it[:n]

    def full(self) -> SubsetRef:
        return SubsetRef(self, frozenset(range(len(self))))

    def subset(self, names: Iterable[Hashable]) -> SubsetRef:
        return SubsetRef(self, frozenset(self.index_of(p) for p in names))

    def check_point(self, i: int) -> int:
        if not isinstance(i, (int, np.integer)) or not 0 <= i < len(self):
            raise IndexError(f"invalid point index {i!r} for a system of {len(self)} points")
        return int(i)


@dataclass(frozen=True, eq=True)
class SubsetRef:
    """A subset of a :class:`FiniteSystem`, stored as point indices."""

    system: FiniteSystem
    members: frozenset

    def __post_init__(self):
        members = frozenset(int(i) for i in self.members)
        bad = [i for i in members if not 0 <= i < len(self.system)]
        if bad:
            raise IndexError(f"subset refers to points outside the system: {sorted(bad)[:5]}")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def __contains__(self, i) -> bool:
        return i in self.members

    def indices(self) -> np.ndarray:
        return np.array(sorted(self.members), dtype=np.int64)

    def names(self) -> list:
        return [self.system.points[i] for i in sorted(self.members)]

    def issubset(self, other: SubsetRef) -> bool:
        return self.system is other.system and self.members <= other.members


@dataclass(frozen=True)
class BowenBallSpec:
    """``B_n(center, radius)`` (open) or its closed counterpart."""

    center: int
    order: int
    radius: float
    closed: bool = False

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("Bowen ball order must be >= 1")
        if not self.radius > 0:
            raise ValueError("Bowen ball radius must be > 0")


def bowen_distances(sys: FiniteSystem, x: int, targets, n: int) -> np.ndarray:
    """``d_n(x, y)`` for every ``y`` in ``targets``."""
    x = sys.check_point(x)
    targets = np.asarray(targets, dtype=np.int64)
    it = sys.iterates(n)
    out = np.zeros(len(targets))
    for k in range(n):
        np.maximum(out, sys.metric.dist_from(int(it[k, x]), it[k, targets]), out=out)
    return out


def bowen_distance(sys: FiniteSystem, x: int, y: int, n: int) -> float:
    """The ``n``-th Bowen distance ``max_{0<=k<n} d(T^k x, T^k y)``."""
    if n < 1:
        raise ValueError("order n must be >= 1")
    y = sys.check_point(y)
    return float(bowen_distances(sys, x, [y], n)[0])


def bowen_matrix(sys: FiniteSystem, rows, cols, n: int) -> np.ndarray:
    """Dense block of ``d_n`` between ``rows`` and ``cols``."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    it = sys.iterates(n)
    out = np.zeros((len(rows), len(cols)))
    for k in range(n):
        np.maximum(out, sys.metric.pairwise(it[k, rows], it[k, cols]), out=out)
    return out


def bowen_within(sys: FiniteSystem, rows, cols, n: int, r: float) -> np.ndarray:
    """Boolean block ``d_n(rows[i], cols[j]) <= r``."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    it = sys.iterates(n)
    out = np.ones((len(rows), len(cols)), dtype=bool)
    for k in range(n):
        out &= sys.metric.within(it[k, rows], it[k, cols], r)
    return out


def bowen_paired(sys: FiniteSystem, a, b, n: int) -> np.ndarray:
    """Elementwise ``d_n(a[k], b[k])``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    it = sys.iterates(n)
    out = np.zeros(len(a))
    for k in range(n):
        np.maximum(out, sys.metric.paired(it[k, a], it[k, b]), out=out)
    return out


def bowen_ball(sys: FiniteSystem, spec: BowenBallSpec, domain: SubsetRef | None = None) -> frozenset:
    """Points of ``domain`` (default: all of ``sys``) inside the ball ``spec``."""
    center = sys.check_point(spec.center)
    if domain is None:
        idx = np.arange(len(sys), dtype=np.int64)
    else:
        if domain.system is not sys:
            raise ValueError("domain belongs to a different system")
        if not len(domain):
            raise ValueError("domain must be nonempty")
        idx = domain.indices()
    d = bowen_distances(sys, center, idx, spec.order)
    r = spec.radius if spec.closed else open_radius(spec.radius)
    return frozenset(int(i) for i in idx[d <= r])


def product_system(a: FiniteSystem, b: FiniteSystem, *, cap: int = PRODUCT_CAP) -> FiniteSystem:
    """``(A x B, rho, T_A x T_B)`` with ``rho`` the max of the factor metrics.

    Point ``(p, q)`` sits at index ``i * |B| + j``.
    """
    size = len(a) * len(b)
    if size > cap:
        raise ResourceCapError(f"product of {len(a)} and {len(b)} points exceeds the cap of {cap}", size=size, cap=cap)
    points = [(p, q) for p in a.points for q in b.points]
    step = (a.step[:, None] * len(b) + b.step[None, :]).reshape(-1)
    prod = FiniteSystem(points, ProductMetric(a.metric, b.metric), step, validate=False)
    prod.factors = (a, b)
    return prod


def product_subset(z1: SubsetRef, z2: SubsetRef, product: FiniteSystem | None = None) -> SubsetRef:
    """``Z1 x Z2`` inside ``product`` (built from the two factors when omitted)."""
    if product is None:
        product = product_system(z1.system, z2.system)
    if product.factors is None or product.factors[0] is not z1.system or product.factors[1] is not z2.system:
        raise ValueError("product was not built from the systems of z1 and z2")
    nb = len(z2.system)
    return SubsetRef(product, frozenset(i * nb + j for i in z1.members for j in z2.members))


def union_subset(z1: SubsetRef, z2: SubsetRef) -> SubsetRef:
    if z1.system is not z2.system:
        raise ValueError("cannot take the union of subsets of different systems")
    return SubsetRef(z1.system, z1.members | z2.members)


def example_extension(x_sys: FiniteSystem, depth: int, *, cap: int = PRODUCT_CAP) -> tuple[FiniteSystem, SubsetRef]:
    """The system ``Z = X x D`` with ``D = {1, 1/2, ..., 1/depth, 0}``.

    The map is ``R(x, 1/(j+1)) = (x, 1/j)``, ``R(x, 1) = (Tx, 1)`` and
    ``R(x, 0) = (x, 0)``; the metric is the max of ``d`` and ``|a - b|`` on
    ``D``.  Returns ``Z`` together with the embedded copy ``X x {1}``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    width = depth + 1
    if len(x_sys) * width > cap:
        raise ResourceCapError(
            f"extension of {len(x_sys)} points to depth {depth} exceeds the cap of {cap}", size=len(x_sys) * width, cap=cap
        )
    values = np.array([1.0 / j for j in range(1, depth + 1)] + [0.0])
    labels = [f"1/{j}" if j > 1 else "1" for j in range(1, depth + 1)] + ["0"]
    d_metric = TableMetric(np.abs(values[:, None] - values[None, :]))

    local = np.arange(width)
    local_next = np.where((local >= 1) & (local < depth), local - 1, local)
    ix = np.arange(len(x_sys))[:, None]
    nxt = ix * width + local_next[None, :]
    nxt[:, 0] = x_sys.step * width
    points = [(p, lab) for p in x_sys.points for lab in labels]
    z = FiniteSystem(points, ProductMetric(x_sys.metric, d_metric), nxt.reshape(-1), validate=False)
    embedded = SubsetRef(z, frozenset(range(0, len(z), width)))
    return z, embedded
