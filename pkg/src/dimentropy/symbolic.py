"""Shifts of finite type: exact word counts and cylinder computations.

Points of a one-sided SFT are infinite admissible sequences; the metric is
``d(x, y) = 2 ** -j`` with ``j`` the first index where ``x`` and ``y``
disagree.  Then ``d_n(x, y) = 2 ** -max(0, j - n + 1)``, so at radius
``eps = 2 ** -m``

* the closed ball ``B_n(x, eps)`` is the cylinder of the first ``n + m - 1``
  symbols of ``x``,
* the open ball ``B_n(x, eps)`` is the cylinder of the first ``n + m`` symbols.

Separated sets, spanning sets, Bowen covers and packings therefore reduce to
counting words and to dynamic programs over the prefix tree, all of which are
exact here.  Only dyadic radii are supported.

A constraint given as forbidden words of length up to ``p + 1`` is handled
through its ``p``-block presentation: states are admissible words of length
``p`` and a symbol moves ``b`` to ``b[1:] + (c,)``.
"""

from __future__ import annotations

import functools
import itertools
import math
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import FiniteSystem
from .errors import ContractError, ResourceCapError
from .estimates import EntropyEstimate
from .metrics import ShiftMetric

BLOCK_CAP = 1 << 16
ALPHABET_CAP = 64


def _as_word(word, alphabet: Sequence[str]) -> tuple[int, ...]:
    """Symbol indices of ``word`` (a string of one-character symbols or a sequence)."""
    index = {a: i for i, a in enumerate(alphabet)}
    if isinstance(word, str):
        if all(len(a) == 1 for a in alphabet):
            items = list(word)
        else:
            raise ValueError(f"word {word!r} must be a list of symbols for multi-character alphabets")
    else:
        items = list(word)
    out = []
    for a in items:
        if isinstance(a, (int, np.integer)) and not isinstance(a, bool):
            out.append(int(a))
        elif str(a) in index:
            out.append(index[str(a)])
        else:
            raise ValueError(f"symbol {a!r} is not in the alphabet {list(alphabet)}")
    return tuple(out)


@dataclass(frozen=True)
class SftSpec:
    """Alphabet plus either a 0/1 transition matrix or a list of forbidden words.

    Words are stored as tuples of symbol indices.  Use :meth:`full`,
    :meth:`from_matrix` or :meth:`from_forbidden` rather than the raw
    constructor.
    """

    alphabet: tuple[str, ...]
    transitions: tuple[tuple[int, ...], ...] | None = None
    forbidden: tuple[tuple[int, ...], ...] | None = None
    name: str = ""

    def __post_init__(self):
        k = len(self.alphabet)
        if k < 1:
            raise ValueError("alphabet must be nonempty")
        if len(set(self.alphabet)) != k:
            raise ValueError("alphabet symbols must be distinct")
        if (self.transitions is None) == (self.forbidden is None):
            raise ValueError("give exactly one of transitions or forbidden")
        if self.transitions is not None:
            if len(self.transitions) != k or any(len(row) != k for row in self.transitions):
                raise ValueError(f"transition matrix must be {k}x{k}")
            if any(v not in (0, 1) for row in self.transitions for v in row):
                raise ValueError("transition matrix entries must be 0 or 1")
        else:
            for w in self.forbidden:
                if not w:
                    raise ValueError("forbidden words must be nonempty")
                if any(not 0 <= c < k for c in w):
                    raise ValueError("forbidden word uses a symbol outside the alphabet")
        if not _lang(self).blocks:
            raise ValueError(f"the shift {self.name or self.alphabet} has an empty language")

    @classmethod
    def full(cls, k: int, name: str | None = None) -> SftSpec:
        return cls(tuple(str(i) for i in range(k)), forbidden=(), name=name or f"full{k}")

    @classmethod
    def from_matrix(cls, alphabet: Sequence[str], matrix, name: str = "") -> SftSpec:
        rows = tuple(tuple(int(v) for v in row) for row in matrix)
        return cls(tuple(str(a) for a in alphabet), transitions=rows, name=name)

    @classmethod
    def from_forbidden(cls, alphabet: Sequence[str], words: Iterable, name: str = "") -> SftSpec:
        alphabet = tuple(str(a) for a in alphabet)
        return cls(alphabet, forbidden=tuple(_as_word(w, alphabet) for w in words), name=name)

    @property
    def k(self) -> int:
        return len(self.alphabet)

    def word(self, w) -> tuple[int, ...]:
        return _as_word(w, self.alphabet)

    def spell(self, w: Sequence[int]) -> str | list[str]:
        syms = [self.alphabet[c] for c in w]
        return "".join(syms) if all(len(a) == 1 for a in self.alphabet) else syms

    def symbol_matrix(self) -> np.ndarray | None:
        """0/1 symbol transition matrix when the constraint has memory one."""
        k = self.k
        if self.transitions is not None:
            return np.array(self.transitions, dtype=np.int64)
        if any(len(w) > 2 for w in self.forbidden):
            return None
        a = np.ones((k, k), dtype=np.int64)
        for w in self.forbidden:
            if len(w) == 1:
                a[w[0], :] = 0
                a[:, w[0]] = 0
            else:
                a[w[0], w[1]] = 0
        return a

    def to_dict(self) -> dict:
        d: dict = {"alphabet": list(self.alphabet)}
        if self.name:
            d["name"] = self.name
        if self.transitions is not None:
            d["transitions"] = [list(r) for r in self.transitions]
        else:
            d["forbidden"] = [self.spell(w) for w in self.forbidden]
        return d


class _Language:
    """Block presentation of an SFT with cached word and extension counts."""

    def __init__(self, spec: SftSpec):
        k = spec.k
        matrix = spec.symbol_matrix()
        if matrix is not None:
            p = 1
            blocks = [(c,) for c in range(k)]
            allowed = {(b, c) for b in range(k) for c in range(k) if matrix[b, c]}
            succ = {(c,): [(d, (d,)) for d in range(k) if (c, d) in allowed] for c in range(k)}
        else:
            forb = set(spec.forbidden)
            p = max(len(w) for w in forb) - 1
            if k**p > BLOCK_CAP:
                raise ResourceCapError(f"{k}**{p} blocks exceed the presentation cap", size=k**p, cap=BLOCK_CAP)

            def clean(w):
                return not any(w[i:j] in forb for i in range(len(w)) for j in range(i + 1, len(w) + 1))

            blocks = [w for w in itertools.product(range(k), repeat=p) if clean(w)]
            succ = {b: [(c, b[1:] + (c,)) for c in range(k) if clean(b + (c,))] for b in blocks}
        live = set(blocks)
        changed = True
        while changed:
            changed = False
            for b in list(live):
                if not any(nb in live for _, nb in succ[b]):
                    live.discard(b)
                    changed = True
        self.p = p
        self.blocks = sorted(live)
        self.index = {b: i for i, b in enumerate(self.blocks)}
        self.succ = [[(c, self.index[nb]) for c, nb in succ[b] if nb in live] for b in self.blocks]
        self.prefixes = {b[:i] for b in self.blocks for i in range(p + 1)}
        self.adjacency = np.zeros((len(self.blocks), len(self.blocks)))
        for i, row in enumerate(self.succ):
            for _, j in row:
                self.adjacency[i, j] = 1.0
        self._lock = threading.Lock()
        self._counts: list[int] = [1]
        self._ext: list[list[int]] = [[1] * len(self.blocks)]

    # States: ("w", u) for a word shorter than p, ("b", i) for block i.
    def state(self, u: tuple[int, ...]):
        if len(u) < self.p:
            return ("w", u) if u in self.prefixes else None
        i = self.index.get(u[: self.p])
        if i is None:
            return None
        for c in u[self.p :]:
            nxt = [j for d, j in self.succ[i] if d == c]
            if not nxt:
                return None
            i = nxt[0]
        return ("b", i)

    def children(self, st):
        kind, v = st
        if kind == "b":
            return [(c, ("b", j)) for c, j in self.succ[v]]
        out = []
        for c in range(max((b[len(v)] for b in self.blocks if b[: len(v)] == v), default=-1) + 1):
            w = v + (c,)
            if w in self.prefixes:
                out.append((c, ("b", self.index[w]) if len(w) == self.p else ("w", w)))
        return out

    def count(self, n: int) -> int:
        """Number of admissible words of length ``n``."""
        with self._lock:
            if n < len(self._counts):
                return self._counts[n]
            for length in range(len(self._counts), n + 1):
                if length <= self.p:
                    self._counts.append(len({b[:length] for b in self.blocks}))
                else:
                    self._counts.append(sum(self._ext_locked(length - self.p)))
            return self._counts[n]

    def _ext_locked(self, r: int) -> list[int]:
        while len(self._ext) <= r:
            prev = self._ext[-1]
            self._ext.append([sum(prev[j] for _, j in row) for row in self.succ])
        return self._ext[r]

    def extensions(self, st, r: int) -> int:
        """Number of admissible continuations of length ``r`` from state ``st``."""
        if r == 0:
            return 1
        if st[0] == "b":
            with self._lock:
                return self._ext_locked(r)[st[1]]
        return sum(self.extensions(child, r - 1) for _, child in self.children(st))


@functools.lru_cache(maxsize=256)
def _lang(spec: SftSpec) -> _Language:
    return _Language(spec)


def count_words(sft: SftSpec, n: int) -> int:
    """Exact number of admissible words of length ``n``."""
    if n < 1:
        raise ValueError("word length must be >= 1")
    return _lang(sft).count(n)


def is_admissible(sft: SftSpec, word: Sequence[int]) -> bool:
    return _lang(sft).state(tuple(word)) is not None


def power_method(matrix: np.ndarray, *, tol: float = 1e-12, max_iter: int = 100_000) -> tuple[float, int, bool]:
    """Dominant eigenvalue of a nonnegative matrix by 1-norm normalised iteration.

    Returns ``(estimate, iterations, converged)``; convergence means two
    successive estimates differ by less than ``tol``.
    """
    a = np.asarray(matrix, dtype=float)
    v = np.full(a.shape[0], 1.0 / a.shape[0])
    prev = math.inf
    for it in range(1, max_iter + 1):
        w = a @ v
        lam = float(w.sum())
        if lam == 0.0:
            return 0.0, it, True
        v = w / lam
        if abs(lam - prev) < tol:
            return lam, it, True
        prev = lam
    return lam, max_iter, False


def sft_entropy_exact(sft: SftSpec, n_max: int = 40, *, tol: float = 1e-9) -> EntropyEstimate:
    """Entropy of the whole shift from word-count ratios, cross-checked by power iteration.

    For the full (compact, invariant) shift the Bowen, packing and upper
    capacity entropies coincide with this value.
    """
    if n_max < 8:
        raise ValueError("n_max must be >= 8")
    lang = _lang(sft)
    counts = [lang.count(n) for n in range(1, n_max + 2)]
    ratios = [math.log(counts[i + 1] / counts[i]) for i in range(len(counts) - 1)]
    word_value = ratios[-1]
    spread = max(ratios[-4:]) - min(ratios[-4:])
    lam, iters, converged = power_method(lang.adjacency)
    power_value = math.log(lam) if lam > 0 else 0.0
    agree = abs(word_value - power_value) <= tol
    diagnostics = {
        "word_ratio": word_value,
        "power_method": power_value,
        "power_iterations": iters,
        "power_converged": converged,
        "ratio_spread": spread,
        "ratio_stable": spread <= tol,
        "agree": agree,
        "flagged": not (agree and converged and spread <= tol),
        "n_max": n_max,
    }
    value = max(word_value, 0.0)
    lo = max(0.0, min(word_value, power_value))
    hi = max(word_value, power_value, value)
    return EntropyEstimate("sft", value, [], (lo, hi), diagnostics)


@dataclass(frozen=True)
class SymbolicScale:
    """Radius ``2 ** -m`` on the symbolic track."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("cylinder depth m must be >= 1")

    @property
    def radius(self) -> float:
        return 2.0**-self.m

    @classmethod
    def from_radius(cls, eps: float) -> SymbolicScale:
        m = -math.log2(eps) if eps > 0 else math.nan
        if not (m >= 1 and float(m).is_integer() and 2.0 ** -int(m) == eps):
            raise ValueError(f"symbolic radii must be 2**-m with m >= 1, got {eps}")
        return cls(int(m))


@dataclass(frozen=True)
class CylinderSet:
    """A finite union of cylinders ``[u]``; the empty word stands for the whole shift."""

    sft: SftSpec
    words: tuple[tuple[int, ...], ...] = ((),)

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(tuple(int(c) for c in w) for w in self.words))

    @classmethod
    def full(cls, sft: SftSpec) -> CylinderSet:
        return cls(sft, ((),))

    @classmethod
    def of(cls, sft: SftSpec, words: Iterable) -> CylinderSet:
        return cls(sft, tuple(sft.word(w) for w in words))

    def normalized(self) -> tuple[tuple[int, ...], ...]:
        """Admissible words, none a prefix of another, sorted."""
        ws = sorted({w for w in self.words if is_admissible(self.sft, w)}, key=lambda w: (len(w), w))
        kept: list[tuple[int, ...]] = []
        for w in ws:
            if not any(w[: len(u)] == u for u in kept):
                kept.append(w)
        return tuple(sorted(kept))

    def is_empty(self) -> bool:
        return not self.normalized()

    def expand(self, length: int) -> frozenset:
        """Admissible words of ``length`` whose cylinders meet this set.

        Two cylinder sets are equal iff their expansions agree at a length at
        least that of every defining word.
        """
        out = set()
        for u in self.normalized():
            if len(u) >= length:
                out.add(u[:length])
            else:
                out.update(_continuations(self.sft, u, length))
        return frozenset(out)

    def depth(self) -> int:
        return max((len(w) for w in self.words), default=0)

    def union(self, other: CylinderSet) -> CylinderSet:
        if other.sft != self.sft:
            raise ValueError("cylinder sets live in different shifts")
        return CylinderSet(self.sft, tuple(self.normalized()) + tuple(other.normalized()))

    def same_set(self, other: CylinderSet) -> bool:
        length = max(self.depth(), other.depth(), 1)
        return self.sft == other.sft and self.expand(length) == other.expand(length)

    def spelled(self) -> list:
        return [self.sft.spell(w) for w in self.normalized()]


def _continuations(sft: SftSpec, u: tuple[int, ...], length: int) -> list[tuple[int, ...]]:
    lang = _lang(sft)
    out = []
    stack = [(u, lang.state(u))]
    while stack:
        w, st = stack.pop()
        if st is None:
            continue
        if len(w) == length:
            out.append(w)
            continue
        for c, child in lang.children(st):
            stack.append((w + (c,), child))
    return out


@dataclass(frozen=True)
class SeparatedCount:
    r: int
    r_tilde: int


def symbolic_separated_count(sft: SftSpec, z: CylinderSet | None, n: int, scale: SymbolicScale) -> SeparatedCount:
    """``r_n(Z, 2**-m)`` and ``r~_n(Z, 2**-m)``: admissible ``(n+m-1)``-prefixes meeting ``Z``.

    Closed balls at dyadic radii are cylinders and therefore partition the
    space, so the largest separated set and the smallest spanning set have the
    same size.
    """
    if n < 1:
        raise ValueError("order n must be >= 1")
    z = CylinderSet.full(sft) if z is None else z
    words = z.normalized()
    if not words:
        raise ValueError("cylinder set is empty")
    lang = _lang(sft)
    length = n + scale.m - 1
    long_prefixes = {u[:length] for u in words if len(u) >= length}
    total = sum(lang.extensions(lang.state(u), length - len(u)) for u in words if len(u) < length)
    r = total + len(long_prefixes)
    return SeparatedCount(r, r)


def _order_weights(s: float, N: int, n_max: int, offset: int) -> dict[int, float]:
    """Map cylinder length ``n + offset`` to ``exp(-s n)`` for ``N <= n <= n_max``."""
    return {n + offset: math.exp(-s * n) for n in range(N, n_max + 1)}


def _trie_dp(z: CylinderSet, node_value, combine_leaf, weight_of) -> float:
    words = z.normalized()
    if not words:
        raise ValueError("cylinder set is empty")
    wordset = set(words)
    lang = _lang(z.sft)

    def visit(u: tuple[int, ...]):
        if u in wordset:
            return node_value(len(u), lang.state(u))
        kids = sorted({w[: len(u) + 1] for w in words if len(w) > len(u) and w[: len(u)] == u})
        return combine_leaf(weight_of(len(u)), [visit(c) for c in kids])

    return visit(())


def cylinder_cover_value(z: CylinderSet, s: float, N: int, n_max: int, m: int, *, with_counts: bool = False):
    """Exact ``M^s_{N, 2^-m}(Z)`` over open Bowen balls of order in ``[N, n_max]``.

    Open balls are cylinders of length ``n + m``; balls are nested or
    disjoint, so an optimal cover is a dynamic program on the prefix tree.
    Returns the value, and with ``with_counts`` also a map order -> number of
    balls in one optimal cover.
    """
    lang = _lang(z.sft)
    weights = _order_weights(s, N, n_max, m)
    top = n_max + m
    memo: dict = {}

    def best(options):
        return min(options, key=lambda t: t[0])

    def node(length: int, st):
        key = (length, st)
        if key in memo:
            return memo[key]
        options = []
        if length in weights:
            options.append((weights[length], {length - m: 1} if with_counts else None))
        if length < top:
            parts = [node(length + 1, child) for _, child in lang.children(st)]
            options.append((sum(p[0] for p in parts), _merge([p[1] for p in parts]) if with_counts else None))
        out = best(options) if options else (math.inf, None)
        memo[key] = out
        return out

    def combine(w, kids):
        options = []
        if w is not None:
            options.append((w[0], w[1]))
        if kids:
            options.append((sum(k[0] for k in kids), _merge([k[1] for k in kids]) if with_counts else None))
        return best(options)

    def weight_of(length):
        if length in weights:
            return (weights[length], {length - m: 1} if with_counts else None)
        return None

    value, counts = _trie_dp(z, node, combine, weight_of)
    return (value, dict(sorted(counts.items()))) if with_counts else value


def cylinder_packing_value(z: CylinderSet, s: float, N: int, n_max: int, m: int, *, with_counts: bool = False):
    """Exact ``P^s_{N, 2^-m}(Z)`` over closed balls of order in ``[N, n_max]`` centred in ``Z``.

    Closed balls are cylinders of length ``n + m - 1``; a disjoint family is
    an antichain in the prefix tree.
    """
    lang = _lang(z.sft)
    offset = m - 1
    weights = _order_weights(s, N, n_max, offset)
    top = n_max + offset
    memo: dict = {}

    def best(options):
        return max(options, key=lambda t: t[0])

    def node(length: int, st):
        key = (length, st)
        if key in memo:
            return memo[key]
        options = [(0.0, {} if with_counts else None)]
        if length in weights:
            options.append((weights[length], {length - offset: 1} if with_counts else None))
        if length < top:
            parts = [node(length + 1, child) for _, child in lang.children(st)]
            options.append((sum(p[0] for p in parts), _merge([p[1] for p in parts]) if with_counts else None))
        out = best(options)
        memo[key] = out
        return out

    def combine(w, kids):
        options = [(0.0, {} if with_counts else None)]
        if w is not None:
            options.append(w)
        if kids:
            options.append((sum(k[0] for k in kids), _merge([k[1] for k in kids]) if with_counts else None))
        return best(options)

    def weight_of(length):
        if length in weights:
            return (weights[length], {length - offset: 1} if with_counts else None)
        return None

    value, counts = _trie_dp(z, node, combine, weight_of)
    return (value, dict(sorted(counts.items()))) if with_counts else value


def _merge(dicts) -> dict:
    out: dict = {}
    for d in dicts:
        for k, v in d.items():
            out[k] = out.get(k, 0) + v
    return out


def product_sft(a: SftSpec, b: SftSpec, *, cap: int = ALPHABET_CAP) -> SftSpec:
    """Product shift on the pair alphabet; symbol ``(i, j)`` has index ``i * |B| + j``.

    A pair sequence is admissible iff both coordinate sequences are.  Word
    counts multiply, which is checked on the first few lengths.
    """
    k = a.k * b.k
    if k > cap:
        raise ResourceCapError(f"product alphabet of {k} symbols exceeds the cap of {cap}", size=k, cap=cap)
    alphabet = tuple(f"({x},{y})" for x in a.alphabet for y in b.alphabet)
    name = f"{a.name or 'A'}x{b.name or 'B'}"
    ma, mb = a.symbol_matrix(), b.symbol_matrix()
    if ma is not None and mb is not None:
        prod = SftSpec.from_matrix(alphabet, np.kron(ma, mb), name=name)
    else:
        words = set()
        for spec, other, first in ((a, b, True), (b, a, False)):
            forb = spec.forbidden if spec.forbidden is not None else _matrix_forbidden(spec)
            for w in forb:
                for ow in itertools.product(range(other.k), repeat=len(w)):
                    pair = zip(w, ow) if first else zip(ow, w)
                    words.add(tuple(i * b.k + j for i, j in pair))
        if len(words) > BLOCK_CAP:
            raise ResourceCapError("too many forbidden pair words", size=len(words), cap=BLOCK_CAP)
        prod = SftSpec(alphabet, forbidden=tuple(sorted(words)), name=name)
    for n in range(1, 5):
        if count_words(prod, n) != count_words(a, n) * count_words(b, n):
            raise ContractError(f"product word counts do not factor at length {n}")
    return prod


def _matrix_forbidden(spec: SftSpec) -> tuple[tuple[int, ...], ...]:
    m = spec.symbol_matrix()
    return tuple((i, j) for i in range(spec.k) for j in range(spec.k) if not m[i, j])


def product_cylinders(z1: CylinderSet, z2: CylinderSet, product: SftSpec) -> CylinderSet:
    """``Z1 x Z2`` as a cylinder set of ``product_sft(z1.sft, z2.sft)``."""
    kb = z2.sft.k
    words = set()
    for u in z1.normalized():
        for v in z2.normalized():
            length = max(len(u), len(v))
            us = [u] if len(u) == length else _continuations(z1.sft, u, length)
            vs = [v] if len(v) == length else _continuations(z2.sft, v, length)
            for x in us:
                for y in vs:
                    words.add(tuple(i * kb + j for i, j in zip(x, y)))
    return CylinderSet(product, tuple(sorted(words)))


def first_symbol_decomposition(z: CylinderSet) -> list[CylinderSet]:
    """Split ``Z`` by the first symbol of its points."""
    parts = []
    for c in range(z.sft.k):
        words = []
        for w in z.normalized():
            if not w:
                words.append((c,))
            elif w[0] == c:
                words.append(w)
        piece = CylinderSet(z.sft, tuple(words))
        if not piece.is_empty():
            parts.append(piece)
    return parts


def periodic_points(sft: SftSpec, period: int, *, cap: int = 1 << 18) -> FiniteSystem:
    """Finite system of the points of period ``period`` with the shift metric.

    Point names are the spelled periods; the map rotates one step left.  For
    ``n + m - 1 <= period`` and a shift where every word closes up within the
    period (e.g. full shifts), separated counts agree with the shift itself.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    lang = _lang(sft)
    if sft.k**period > cap and count_words(sft, period) > cap:
        raise ResourceCapError(f"too many words of length {period}", size=count_words(sft, period), cap=cap)
    words = []
    for w in sorted(_continuations(sft, (), period)):
        if lang.state(w + w + w[: lang.p + 1]) is not None:
            words.append(w)
    if not words:
        raise ValueError(f"no points of period {period}")
    arr = np.array(words, dtype=np.int64)
    codes = arr @ (sft.k ** np.arange(period - 1, -1, -1, dtype=np.int64))
    rotated = np.roll(arr, -1, axis=1) @ (sft.k ** np.arange(period - 1, -1, -1, dtype=np.int64))
    order = np.argsort(codes)
    step = order[np.searchsorted(codes, rotated, sorter=order)]
    names = ["".join(sft.alphabet[c] for c in w) for w in words]
    return FiniteSystem(names, ShiftMetric(arr), step, validate=False)
