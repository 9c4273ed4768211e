"""Scale schedules, entropy estimates and the small fitting helpers they share."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ScaleSchedule:
    """Grid of orders, radii and exponents over which finite-scale quantities run.

    ``N`` and ``n_max`` bound the ball orders; ``epsilons`` must be strictly
    decreasing.  ``ladder`` is the number of truncation levels used when a
    critical exponent is extrapolated in the order (see
    :func:`dimentropy.caratheodory.bowen_entropy_estimate`).  ``s_hi=None``
    picks an upper search bound from the size of the target.
    """

    N: int = 1
    n_max: int = 8
    epsilons: tuple[float, ...] = (0.5, 0.25)
    s_lo: float = 0.0
    s_hi: float | None = None
    tol: float = 1e-9
    ladder: int = 4
    exact_cap: int = 64
    greedy_cap: int = 4096
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if not 1 <= self.N <= self.n_max:
            raise ValueError(f"schedule needs 1 <= N <= n_max, got N={self.N}, n_max={self.n_max}")
        if not self.epsilons:
            raise ValueError("schedule needs at least one epsilon")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        if any(a <= b for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        if self.s_lo < 0:
            raise ValueError("s_lo must be nonnegative")
        if self.s_hi is not None and self.s_hi <= self.s_lo:
            raise ValueError("s_hi must exceed s_lo")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.ladder < 1:
            raise ValueError("ladder must be >= 1")

    @property
    def n_values(self) -> list[int]:
        return list(range(self.N, self.n_max + 1))

    def bowen_ladder(self) -> list[int]:
        """Largest admissible orders used to extrapolate the Bowen exponent."""
        lo = max(self.N, math.ceil(self.n_max / 2))
        return sorted({int(round(x)) for x in np.linspace(lo, self.n_max, self.ladder)})

    def packing_ladder(self) -> list[int]:
        """Minimal orders used to extrapolate the packing exponent."""
        return sorted({int(round(x)) for x in np.linspace(self.N, self.n_max, self.ladder)})

    def replace(self, **changes) -> ScaleSchedule:
        data = asdict(self)
        data.update(changes)
        return ScaleSchedule(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epsilons"] = list(self.epsilons)
        return d


@dataclass
class EntropyEstimate:
    """An entropy value in nats with per-radius exponents and an uncertainty bracket."""

    kind: str
    value: float
    per_epsilon: list[tuple[float, float]]
    bracket: tuple[float, float]
    diagnostics: dict = field(default_factory=dict)
    scales: list[dict] = field(default_factory=list)

    def __post_init__(self):
        lo, hi = self.bracket
        slack = 1e-12 * max(1.0, abs(self.value))
        if not lo - slack <= self.value <= hi + slack:
            raise ValueError(f"estimate {self.value} lies outside its bracket [{lo}, {hi}]")
        if self.value < 0:
            raise ValueError("entropy estimates are nonnegative")

    @property
    def half_width(self) -> float:
        return (self.bracket[1] - self.bracket[0]) / 2

    def to_dict(self, units: str = "nats") -> dict:
        scale = 1.0 / LOG2 if units == "bits" else 1.0
        return {
            "kind": self.kind,
            "units": units,
            "value": self.value * scale,
            "bracket": [self.bracket[0] * scale, self.bracket[1] * scale],
            "per_epsilon": [[e, v * scale] for e, v in self.per_epsilon],
            "diagnostics": self.diagnostics,
            "scales": self.scales,
        }


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares ``y = slope * x + intercept``; returns (slope, intercept, max residual)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2:
        return 0.0, float(y[0]) if len(y) else 0.0, 0.0
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum() / sxx) if sxx > 0 else 0.0
    intercept = float(ym - slope * xm)
    resid = float(np.abs(y - (slope * x + intercept)).max())
    return slope, intercept, resid


def growth_slope(ns: Sequence[int], counts: Sequence[int]) -> float:
    """Slope of ``log count`` against ``n``."""
    return fit_line(ns, [math.log(c) for c in counts])[0]


def extrapolate_in_order(orders: Sequence[int], values: Sequence[float]) -> tuple[float, float]:
    """Intercept of ``values`` regressed on ``1/order``; returns (intercept, max residual).

    Finite-order critical exponents carry a bias of the form ``c / order``
    (additive constants in the log-counts); the intercept removes it.
    """
    if len(orders) < 2:
        return float(values[-1]), 0.0
    _, intercept, resid = fit_line([1.0 / n for n in orders], values)
    return intercept, resid


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Order-preserving map; ``threads=0`` means one worker per CPU."""
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(fn, items))
