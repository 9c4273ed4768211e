"""Distance backends for finite systems.

A backend answers three questions about an N-point (pseudo)metric space:

* ``dist_from(i, js)`` -- distances from point ``i`` to the points ``js``;
* ``pairwise(rows, cols)`` -- a dense distance block;
* ``labels(r, among)`` -- a labelling of ``among`` such that ``d(x, y) <= r``
  implies equal labels.  The second return value says whether the converse also
  holds on ``among``, i.e. whether the closed-``r`` relation is an equivalence
  there.  Solvers use this to group points that can never conflict and to skip
  pairwise work entirely when the relation is already a partition.

Open-ball relations ``d < r`` are obtained by querying the closed relation at
``np.nextafter(r, 0)``; every backend returns IEEE doubles so the two agree.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

DENSE_LABEL_CAP = 4096


def open_radius(r: float) -> float:
    """Largest double strictly below ``r``: ``d < r`` iff ``d <= open_radius(r)``."""
    return float(np.nextafter(r, -np.inf))


def _components(n: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, lab = connected_components(graph, directed=False)
    return lab.astype(np.int64)


def _is_partition(related: np.ndarray, lab: np.ndarray) -> bool:
    return bool(np.array_equal(related, lab[:, None] == lab[None, :]))


class Metric:
    """Base class; subclasses implement ``dist_from`` and usually ``labels``."""

    size: int

    def dist_from(self, i: int, js: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pairwise(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        out = np.empty((len(rows), len(cols)))
        for k, i in enumerate(rows):
            out[k] = self.dist_from(int(i), cols)
        return out

    def paired(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Elementwise distances ``d(i[k], j[k])``."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        return np.array([self.dist_from(int(a), np.array([b]))[0] for a, b in zip(i, j)], dtype=float)

    def within(self, rows: np.ndarray, cols: np.ndarray, r: float) -> np.ndarray:
        """Boolean block ``d(rows[i], cols[j]) <= r``."""
        return self.pairwise(rows, cols) <= r

    def diameter(self, among: np.ndarray) -> float:
        among = np.asarray(among, dtype=np.int64)
        if len(among) < 2:
            return 0.0
        return float(max(self.dist_from(int(i), among).max() for i in among))

    def labels(self, r: float, among: np.ndarray) -> tuple[np.ndarray, bool]:
        among = np.asarray(among, dtype=np.int64)
        if len(among) > DENSE_LABEL_CAP:
            return np.zeros(len(among), dtype=np.int64), False
        related = self.pairwise(among, among) <= r
        rows, cols = np.nonzero(related)
        lab = _components(len(among), rows, cols)
        return lab, _is_partition(related, lab)

    def table(self, cap: int = DENSE_LABEL_CAP) -> np.ndarray:
        if self.size > cap:
            from .errors import ResourceCapError

            raise ResourceCapError(
                f"refusing to materialise a {self.size}x{self.size} distance table",
                size=self.size,
                cap=cap,
            )
        idx = np.arange(self.size)
        return self.pairwise(idx, idx)

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


class TableMetric(Metric):
    """Explicit symmetric distance table."""

    def __init__(self, table):
        t = np.array(table, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError(f"distance table must be square, got shape {t.shape}")
        t.setflags(write=False)
        self._t = t
        self.size = t.shape[0]

    @property
    def values(self) -> np.ndarray:
        return self._t

    def dist_from(self, i, js):
        return self._t[i, np.asarray(js, dtype=np.int64)]

    def paired(self, i, j):
        return self._t[np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64)]

    def diameter(self, among):
        among = np.asarray(among, dtype=np.int64)
        return float(self.pairwise(among, among).max(initial=0.0))

    def pairwise(self, rows, cols):
        return self._t[np.ix_(np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))]

    def labels(self, r, among):
        among = np.asarray(among, dtype=np.int64)
        related = self.pairwise(among, among) <= r
        rows, cols = np.nonzero(related)
        lab = _components(len(among), rows, cols)
        return lab, _is_partition(related, lab)

    def table(self, cap=None):
        return self._t

    def describe(self):
        return {"kind": "table"}


class CoordMetric(Metric):
    """Points in R^d under the euclidean or chebyshev (max-coordinate) norm."""

    KINDS = ("euclidean", "chebyshev")

    def __init__(self, coords, kind: str = "euclidean"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown coordinate metric {kind!r}; expected one of {self.KINDS}")
        c = np.array(coords, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2:
            raise ValueError("coordinates must be a list of equal-length vectors")
        c.setflags(write=False)
        self.coords = c
        self.kind = kind
        self.size = c.shape[0]

    def _norm(self, diff: np.ndarray) -> np.ndarray:
        if self.kind == "chebyshev":
            return np.abs(diff).max(axis=-1)
        return np.sqrt((diff * diff).sum(axis=-1))

    def dist_from(self, i, js):
        return self._norm(self.coords[np.asarray(js, dtype=np.int64)] - self.coords[i])

    def diameter(self, among):
        c = self.coords[np.asarray(among, dtype=np.int64)]
        if len(c) < 2:
            return 0.0
        if self.kind == "chebyshev":
            return float((c.max(axis=0) - c.min(axis=0)).max())
        return Metric.diameter(self, among)

    def paired(self, i, j):
        return self._norm(self.coords[np.asarray(i, dtype=np.int64)] - self.coords[np.asarray(j, dtype=np.int64)])

    def pairwise(self, rows, cols):
        a = self.coords[np.asarray(rows, dtype=np.int64)]
        b = self.coords[np.asarray(cols, dtype=np.int64)]
        return self._norm(b[None, :, :] - a[:, None, :])

    def labels(self, r, among):
        among = np.asarray(among, dtype=np.int64)
        if len(among) <= DENSE_LABEL_CAP:
            return TableMetric.labels(self, r, among)
        # Inflated query radius gives candidate pairs; the exact kernel decides.
        tree = cKDTree(self.coords[among])
        p = np.inf if self.kind == "chebyshev" else 2.0
        pairs = tree.query_pairs(r * (1 + 1e-9) + 1e-300, p=p, output_type="ndarray")
        if len(pairs):
            d = self._norm(self.coords[among[pairs[:, 0]]] - self.coords[among[pairs[:, 1]]])
            pairs = pairs[d <= r]
        lab = _components(len(among), pairs[:, 0], pairs[:, 1]) if len(pairs) else np.arange(len(among))
        _, sizes = np.unique(lab, return_counts=True)
        exact = int((sizes * (sizes - 1) // 2).sum()) == len(pairs)
        return lab, exact

    def describe(self):
        return {"kind": "coords", "metric": self.kind}


class ShiftMetric(Metric):
    """Sequences compared by first disagreement: ``d(x, y) = base ** -j``.

    Rows of ``words`` are one period of periodic sequences, so two distinct
    rows always disagree somewhere in the first ``L`` symbols.
    """

    def __init__(self, words, base: float = 2.0):
        w = np.array(words, dtype=np.int64)
        if w.ndim != 2:
            raise ValueError("words must be a 2-d array")
        w.setflags(write=False)
        self.words = w
        self.base = float(base)
        self.size, self.length = w.shape

    def dist_from(self, i, js):
        neq = self.words[np.asarray(js, dtype=np.int64)] != self.words[i]
        j = neq.argmax(axis=1).astype(float)
        return np.where(neq.any(axis=1), np.power(self.base, -j), 0.0)

    def paired(self, i, j):
        neq = self.words[np.asarray(i, dtype=np.int64)] != self.words[np.asarray(j, dtype=np.int64)]
        first = neq.argmax(axis=1).astype(float)
        return np.where(neq.any(axis=1), np.power(self.base, -first), 0.0)

    def pairwise(self, rows, cols):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        out = np.empty((len(rows), len(cols)))
        b = self.words[cols]
        step = max(1, (1 << 22) // max(1, len(cols) * self.length))
        for start in range(0, len(rows), step):
            neq = self.words[rows[start : start + step], None, :] != b[None, :, :]
            first = neq.argmax(axis=2).astype(float)
            out[start : start + step] = np.where(neq.any(axis=2), np.power(self.base, -first), 0.0)
        return out

    def within(self, rows, cols, r):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        p = self.depth_for(r)
        if p == 0:
            return np.ones((len(rows), len(cols)), dtype=bool)
        _, lab = np.unique(self.words[np.concatenate([rows, cols]), :p], axis=0, return_inverse=True)
        lab = lab.reshape(-1)
        return lab[: len(rows), None] == lab[None, len(rows) :]

    def diameter(self, among):
        w = self.words[np.asarray(among, dtype=np.int64)]
        if len(w) < 2:
            return 0.0
        differs = (w != w[0]).any(axis=0)
        return float(self.base ** -int(differs.argmax())) if differs.any() else 0.0

    def depth_for(self, r: float) -> int:
        """Smallest ``j`` with ``base ** -j <= r`` (capped at the word length)."""
        j = 0
        while j < self.length and self.base ** -j > r:
            j += 1
        return j

    def labels(self, r, among):
        among = np.asarray(among, dtype=np.int64)
        p = self.depth_for(r)
        if p == 0:
            return np.zeros(len(among), dtype=np.int64), True
        _, lab = np.unique(self.words[among, :p], axis=0, return_inverse=True)
        return lab.reshape(-1).astype(np.int64), True

    def describe(self):
        return {"kind": "shift", "base": self.base, "length": self.length}


class ProductMetric(Metric):
    """Max-metric on ``A x B``; point ``(a, b)`` has index ``a * |B| + b``."""

    def __init__(self, a: Metric, b: Metric):
        self.a = a
        self.b = b
        self.size = a.size * b.size

    def split(self, idx):
        return np.divmod(np.asarray(idx, dtype=np.int64), self.b.size)

    def dist_from(self, i, js):
        ia, ib = divmod(int(i), self.b.size)
        ja, jb = self.split(js)
        return np.maximum(self.a.dist_from(ia, ja), self.b.dist_from(ib, jb))

    def paired(self, i, j):
        ia, ib = self.split(i)
        ja, jb = self.split(j)
        return np.maximum(self.a.paired(ia, ja), self.b.paired(ib, jb))

    def within(self, rows, cols, r):
        ra, rb = self.split(rows)
        ca, cb = self.split(cols)
        ua, ia = np.unique(ra, return_inverse=True)
        va, ja = np.unique(ca, return_inverse=True)
        ub, ib = np.unique(rb, return_inverse=True)
        vb, jb = np.unique(cb, return_inverse=True)
        wa = self.a.within(ua, va, r)[np.ix_(ia.reshape(-1), ja.reshape(-1))]
        wb = self.b.within(ub, vb, r)[np.ix_(ib.reshape(-1), jb.reshape(-1))]
        return wa & wb

    def diameter(self, among):
        ja, jb = self.split(among)
        return max(self.a.diameter(np.unique(ja)), self.b.diameter(np.unique(jb)))

    def pairwise(self, rows, cols):
        ra, rb = self.split(rows)
        ca, cb = self.split(cols)
        ua, ia = np.unique(ra, return_inverse=True)
        va, ja = np.unique(ca, return_inverse=True)
        ub, ib = np.unique(rb, return_inverse=True)
        vb, jb = np.unique(cb, return_inverse=True)
        da = self.a.pairwise(ua, va)[np.ix_(ia, ja)]
        db = self.b.pairwise(ub, vb)[np.ix_(ib, jb)]
        return np.maximum(da, db)

    def labels(self, r, among):
        ja, jb = self.split(among)
        ua, inva = np.unique(ja, return_inverse=True)
        ub, invb = np.unique(jb, return_inverse=True)
        la, ea = self.a.labels(r, ua)
        lb, eb = self.b.labels(r, ub)
        pair = la[inva] * (int(lb.max(initial=0)) + 1) + lb[invb]
        _, lab = np.unique(pair, return_inverse=True)
        return lab.reshape(-1).astype(np.int64), ea and eb

    def describe(self):
        return {"kind": "product", "factors": [self.a.describe(), self.b.describe()]}
