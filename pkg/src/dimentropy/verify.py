"""Fixed-scale inequality checks, the seeded fuzzer and witness replay.

Every check evaluates both sides of an inequality that holds for all finite
systems at a fixed ``(n, eps, s)`` and reports the smallest margin.  Integer
sides are compared exactly.  Float sides (sums of ``exp(-s n)``) allow a
relative slack of ``REL_TIE`` because a sum of separately rounded partial
sums can sit one ulp below the correctly rounded total.

A failing report carries a witness: the serialised systems and arguments,
which :func:`replay` turns back into the same check.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .capacity import greedy_separated, is_separated, is_spanning, max_separated_exact, min_spanning_exact
from .caratheodory import BallFamily, Decomposition, bowen_entropy_estimate, packing_entropy_estimate
from .capacity import capacity_entropy_estimate
from .core import FiniteSystem, SubsetRef, bowen_within, product_subset, product_system, union_subset
from .estimates import ScaleSchedule, parallel_map
from .io import system_from_dict, system_to_dict
from .metrics import CoordMetric, open_radius
from .solvers import REL_TIE


@dataclass
class CheckReport:
    """Outcome of one check on one instance; ``slack`` is the smallest margin seen."""

    check: str
    instance: str
    status: str
    slack: float | None = None
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in ("pass", "fail", "skip"):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == "fail" and self.witness is None:
            raise ValueError("a failing report needs a witness")

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "instance": self.instance,
            "status": self.status,
            "slack": self.slack,
            "witness": self.witness,
            "details": self.details,
        }


class _Tally:
    """Collects inequality margins and the first violation."""

    def __init__(self):
        self.slack = math.inf
        self.failure: dict | None = None

    def leq(self, lhs, rhs, label: str, *, relative: bool = False, **context) -> None:
        margin = rhs - lhs
        ok = lhs <= rhs * (1 + REL_TIE) if relative and rhs >= 0 else lhs <= rhs
        self.slack = min(self.slack, float(margin))
        if not ok and self.failure is None:
            self.failure = {"inequality": label, "lhs": lhs, "rhs": rhs, **context}

    def true(self, cond: bool, label: str, **context) -> None:
        if not cond and self.failure is None:
            self.failure = {"assertion": label, **context}


# --- witness encoding ----------------------------------------------------------


def _encode(value, systems: list):
    def sys_id(s):
        for k, t in enumerate(systems):
            if t is s:
                return k
        systems.append(s)
        return len(systems) - 1

    if isinstance(value, FiniteSystem):
        return {"$system": sys_id(value)}
    if isinstance(value, SubsetRef):
        return {"$subset": sys_id(value.system), "points": [str(p) for p in value.names()]}
    if isinstance(value, Decomposition):
        return {"$decomposition": [_encode(p, systems) for p in value.parts]}
    if isinstance(value, ScaleSchedule):
        return {"$schedule": value.to_dict()}
    return value


def _decode(value, systems: list):
    if isinstance(value, dict):
        if "$system" in value:
            return systems[value["$system"]]
        if "$subset" in value:
            return systems[value["$subset"]].subset(value["points"])
        if "$decomposition" in value:
            return Decomposition(tuple(_decode(p, systems) for p in value["$decomposition"]))
        if "$schedule" in value:
            d = dict(value["$schedule"])
            d["epsilons"] = tuple(d["epsilons"])
            return ScaleSchedule(**d)
    return value


def _report(name: str, instance: str, tally: _Tally, args: dict, details: dict | None = None) -> CheckReport:
    details = dict(details or {})
    slack = None if tally.slack == math.inf else tally.slack
    if tally.failure is None:
        return CheckReport(name, instance, "pass", slack, None, details)
    systems: list = []
    encoded = {k: _encode(v, systems) for k, v in args.items()}
    witness = {
        "check": name,
        "instance": instance,
        "systems": [system_to_dict(s) for s in systems],
        "args": encoded,
        "violation": tally.failure,
    }
    return CheckReport(name, instance, "fail", slack, witness, details)


# --- fixed-scale checks -----------------------------------------------------


def _r(sys, z, n, eps) -> int:
    return len(max_separated_exact(sys, z, n, eps, cap=max(64, len(z))))


def check_monotone_subset(
    sys: FiniteSystem, z: SubsetRef, z_sup: SubsetRef, sched: ScaleSchedule, s_values=(0.0, 0.5, 1.0), instance: str = ""
) -> CheckReport:
    """``r_n``, ``M^s_{N,eps}`` and ``P^s_{N,eps}`` do not decrease when ``Z`` grows."""
    name = "monotone_subset"
    args = dict(sys=sys, z=z, z_sup=z_sup, sched=sched, s_values=list(s_values))
    if not len(z):
        return CheckReport(name, instance, "skip", details={"reason": "empty subset"})
    if not z.issubset(z_sup):
        raise ValueError("z must be a subset of z_sup")
    t = _Tally()
    for eps in sched.epsilons:
        for n in sched.n_values:
            t.leq(_r(sys, z, n, eps), _r(sys, z_sup, n, eps), "r_n(Z) <= r_n(Z')", n=n, eps=eps)
        small = [BallFamily(sys, z, sched.N, sched.n_max, eps, k) for k in ("cover", "packing")]
        big = [BallFamily(sys, z_sup, sched.N, sched.n_max, eps, k) for k in ("cover", "packing")]
        for s in s_values:
            for fs, fb, label in zip(small, big, ("M", "P")):
                t.leq(fs.solve(s, True).value, fb.solve(s, True).value, f"{label}(Z) <= {label}(Z')", relative=True, eps=eps, s=s)
    return _report(name, instance, t, args)


def check_union_bounds(sys: FiniteSystem, z1: SubsetRef, z2: SubsetRef, n: int, eps: float, instance: str = "") -> CheckReport:
    """``max(r_n(Z1), r_n(Z2)) <= r_n(Z1 u Z2) <= r_n(Z1) + r_n(Z2)``."""
    name = "union_bounds"
    args = dict(sys=sys, z1=z1, z2=z2, n=n, eps=eps)
    if not len(z1) or not len(z2):
        return CheckReport(name, instance, "skip", details={"reason": "empty subset"})
    t = _Tally()
    a, b, u = _r(sys, z1, n, eps), _r(sys, z2, n, eps), _r(sys, union_subset(z1, z2), n, eps)
    t.leq(max(a, b), u, "max(r_n(Z1), r_n(Z2)) <= r_n(Z1 u Z2)", r1=a, r2=b, r_union=u)
    t.leq(u, a + b, "r_n(Z1 u Z2) <= r_n(Z1) + r_n(Z2)", r1=a, r2=b, r_union=u)
    return _report(name, instance, t, args, {"r1": a, "r2": b, "r_union": u})


def check_product_spanning(
    sys_a: FiniteSystem, sys_b: FiniteSystem, z1: SubsetRef, z2: SubsetRef, n: int, eps: float, instance: str = ""
) -> CheckReport:
    """``r~_n(Z1 x Z2) <= r~_n(Z1) r~_n(Z2)``; the product of spanning sets spans the product."""
    name = "product_spanning"
    args = dict(sys_a=sys_a, sys_b=sys_b, z1=z1, z2=z2, n=n, eps=eps)
    if not len(z1) or not len(z2):
        return CheckReport(name, instance, "skip", details={"reason": "empty subset"})
    prod = product_system(sys_a, sys_b)
    zp = product_subset(z1, z2, prod)
    cap = max(64, len(prod))
    s1 = min_spanning_exact(sys_a, z1, n, eps, cap=max(64, len(sys_a)))
    s2 = min_spanning_exact(sys_b, z2, n, eps, cap=max(64, len(sys_b)))
    sp = min_spanning_exact(prod, zp, n, eps, cap=cap)
    t = _Tally()
    t.leq(len(sp), len(s1) * len(s2), "r~_n(Z1 x Z2) <= r~_n(Z1) r~_n(Z2)")
    pairs = [i * len(sys_b) + j for i in s1.points for j in s2.points]
    t.true(is_spanning(prod, zp, pairs, n, eps), "S1 x S2 spans Z1 x Z2", s1=list(s1.points), s2=list(s2.points))
    return _report(name, instance, t, args, {"product": len(sp), "factors": [len(s1), len(s2)], "tight": len(sp) == len(s1) * len(s2)})


def maximal_disjoint_family(sys: FiniteSystem, z: SubsetRef, n: int, eps: float) -> list[int]:
    """Centres (ascending) of a maximal family of disjoint closed balls centred in ``Z``."""
    balls = bowen_within(sys, z.indices(), np.arange(len(sys)), n, eps)
    used = np.zeros(len(sys), dtype=bool)
    chosen = []
    for row, c in zip(balls, z.indices()):
        if not (row & used).any():
            chosen.append(int(c))
            used |= row
    return chosen


def check_packing_to_cover(sys: FiniteSystem, z: SubsetRef, n: int, eps: float, delta: float | None = None, instance: str = "") -> CheckReport:
    """A maximal disjoint family of closed ``(n, eps)``-balls: its open ``(n, 2 eps + delta)``-balls cover ``Z``."""
    name = "packing_to_cover"
    delta = eps / 10 if delta is None else delta
    args = dict(sys=sys, z=z, n=n, eps=eps, delta=delta)
    if not len(z):
        return CheckReport(name, instance, "skip", details={"reason": "empty subset"})
    if delta <= 0:
        raise ValueError("delta must be positive")
    centers = maximal_disjoint_family(sys, z, n, eps)
    covered = bowen_within(sys, np.array(centers), z.indices(), n, open_radius(2 * eps + delta)).any(axis=0)
    t = _Tally()
    missing = [str(sys.points[i]) for i, c in zip(z.indices(), covered) if not c]
    t.true(not missing, "open (n, 2eps+delta)-balls at the packing centres cover Z", centers=[str(sys.points[c]) for c in centers], uncovered=missing)
    t.slack = float(len(z) - len(missing))
    return _report(name, instance, t, args, {"family_size": len(centers)})


def check_separated_vs_packing(
    sys: FiniteSystem, z: SubsetRef, N: int, eps: float, s: float, n_max: int | None = None, instance: str = ""
) -> CheckReport:
    """``r_N(Z, 2 eps) exp(-N s) <= P^s_{N,eps}(Z)`` with orders ``N..n_max``."""
    name = "separated_vs_packing"
    n_max = N if n_max is None else n_max
    args = dict(sys=sys, z=z, N=N, eps=eps, s=s, n_max=n_max)
    if not len(z):
        return CheckReport(name, instance, "skip", details={"reason": "empty subset"})
    r = _r(sys, z, N, 2 * eps)
    lhs = r * math.exp(-N * s)
    p = BallFamily(sys, z, N, n_max, eps, "packing").solve(s, True).value
    t = _Tally()
    t.leq(lhs, p, "r_N(Z, 2eps) exp(-N s) <= P^s_{N,eps}(Z)", relative=True, r=r)
    return _report(name, instance, t, args, {"r": r, "packing": p})


def check_subadditivity(sys: FiniteSystem, z: SubsetRef, decomp: Decomposition, sched: ScaleSchedule, s_values=(0.0, 0.5, 1.0), instance: str = "") -> CheckReport:
    """``M^s_{N,eps}(Z) <= sum_i M^s_{N,eps}(Z_i)`` for a decomposition of ``Z``."""
    name = "subadditivity"
    args = dict(sys=sys, z=z, decomp=decomp, sched=sched, s_values=list(s_values))
    if not len(z):
        return CheckReport(name, instance, "skip", details={"reason": "empty subset"})
    decomp.validate(z)
    t = _Tally()
    for eps in sched.epsilons:
        whole = BallFamily(sys, z, sched.N, sched.n_max, eps, "cover")
        parts = [BallFamily(sys, p, sched.N, sched.n_max, eps, "cover") for p in decomp.nonempty_parts()]
        for s in s_values:
            total = math.fsum(f.solve(s, True).value for f in parts)
            t.leq(whole.solve(s, True).value, total, "M(Z) <= sum M(Z_i)", relative=True, eps=eps, s=s)
    return _report(name, instance, t, args)


def check_greedy_spanning(sys: FiniteSystem, z: SubsetRef, n: int, eps: float, instance: str = "") -> CheckReport:
    """The greedy separated set is separated, spans ``Z`` and is no larger than the maximum."""
    name = "greedy_spanning"
    args = dict(sys=sys, z=z, n=n, eps=eps)
    if not len(z):
        return CheckReport(name, instance, "skip", details={"reason": "empty subset"})
    g = greedy_separated(sys, z, n, eps)
    t = _Tally()
    t.true(is_separated(sys, g.points, n, eps), "greedy set is separated", points=list(g.points))
    t.true(is_spanning(sys, z, g.points, n, eps), "greedy set spans Z", points=list(g.points))
    best = _r(sys, z, n, eps)
    t.leq(len(g), best, "|greedy| <= r_n(Z)")
    span = len(min_spanning_exact(sys, z, n, eps, cap=max(64, len(sys))))
    t.leq(span, len(g), "r~_n(Z) <= |greedy|")
    return _report(name, instance, t, args, {"greedy": len(g), "max": best, "min_spanning": span})


CHECKS: dict[str, Callable[..., CheckReport]] = {
    "monotone_subset": check_monotone_subset,
    "union_bounds": check_union_bounds,
    "product_spanning": check_product_spanning,
    "packing_to_cover": check_packing_to_cover,
    "separated_vs_packing": check_separated_vs_packing,
    "subadditivity": check_subadditivity,
    "greedy_spanning": check_greedy_spanning,
}


def replay(witness: dict) -> CheckReport:
    """Re-run the check recorded in a witness."""
    systems = []
    for d in witness["systems"]:
        systems.append(system_from_dict(d, validate=False)[0])
    args = {k: _decode(v, systems) for k, v in witness["args"].items()}
    return CHECKS[witness["check"]](**args, instance=witness.get("instance", ""))


# --- symbolic products --------------------------------------------------------


def _target(item):
    from .symbolic import CylinderSet

    if isinstance(item, tuple):
        return item
    return item, CylinderSet.full(item)


def check_theorem_products(pairs, sched: ScaleSchedule, *, instance: str = "") -> CheckReport:
    """Product inequalities between ``h^B``, ``h^P`` and ``h^U`` on symbolic pairs.

    Each item of ``pairs`` is ``(A, B)`` where a factor is an SFT (whole
    space) or ``(SftSpec, CylinderSet)``.  With brackets ``[lo, hi]`` it
    asserts

    * ``h^B(Z1) + h^B(Z2) <= h^B(Z1 x Z2) <= h^B(Z1) + h^P(Z2)``,
    * ``h^P(Z1 x Z2) <= h^P(Z1) + h^P(Z2)``, ``h^U(Z1 x Z2) <= h^U(Z1) + h^U(Z2)``,

    and, when ``Z2`` is the whole (compact, invariant) shift, that each of
    the three product entropies matches the sum of the factor values: the
    brackets overlap.
    """
    from .symbolic import CylinderSet, product_cylinders, product_sft

    name = "theorem_products"
    t = _Tally()
    rows = []
    for item_a, item_b in pairs:
        (sa, za), (sb, zb) = _target(item_a), _target(item_b)
        prod = product_sft(sa, sb)
        zp = product_cylinders(za, zb, prod)
        est = {}
        for label, spec, zz in (("1", sa, za), ("2", sb, zb), ("x", prod, zp)):
            est[label] = {
                "B": bowen_entropy_estimate(spec, zz, sched),
                "P": packing_entropy_estimate(spec, zz, sched),
                "U": capacity_entropy_estimate(spec, zz, sched),
            }
        b1, b2, bx = est["1"]["B"], est["2"]["B"], est["x"]["B"]
        p1, p2, px = est["1"]["P"], est["2"]["P"], est["x"]["P"]
        u1, u2, ux = est["1"]["U"], est["2"]["U"], est["x"]["U"]
        pair = f"{sa.name or 'A'} x {sb.name or 'B'}"
        t.leq(b1.bracket[0] + b2.bracket[0], bx.bracket[1], "h^B(Z1) + h^B(Z2) <= h^B(Z1 x Z2)", pair=pair)
        t.leq(bx.bracket[0], b1.bracket[1] + p2.bracket[1], "h^B(Z1 x Z2) <= h^B(Z1) + h^P(Z2)", pair=pair)
        t.leq(px.bracket[0], p1.bracket[1] + p2.bracket[1], "h^P(Z1 x Z2) <= h^P(Z1) + h^P(Z2)", pair=pair)
        t.leq(ux.bracket[0], u1.bracket[1] + u2.bracket[1], "h^U(Z1 x Z2) <= h^U(Z1) + h^U(Z2)", pair=pair)
        row = {"pair": pair}
        for k in ("B", "P", "U"):
            row[k] = {
                "factors": [est["1"][k].value, est["2"][k].value],
                "product": est["x"][k].value,
                "product_bracket": list(est["x"][k].bracket),
                "sum_bracket": [est["1"][k].bracket[0] + est["2"][k].bracket[0], est["1"][k].bracket[1] + est["2"][k].bracket[1]],
            }
        compact = zb.same_set(CylinderSet.full(sb))
        row["invariant_compact_factor"] = compact
        if compact:
            for k in ("B", "P", "U"):
                lo, hi = row[k]["sum_bracket"]
                plo, phi = row[k]["product_bracket"]
                equal = plo <= hi and lo <= phi
                row[k]["equal"] = equal
                t.true(equal, f"h^{k}(Z1 x Z2) = h^{k}(Z1) + h^{k}(Z2) for an invariant compact factor", pair=pair)
        rows.append(row)
    if t.failure is None:
        return CheckReport(name, instance, "pass", None if t.slack == math.inf else t.slack, None, {"pairs": rows})
    witness = {"check": name, "instance": instance, "pairs": [r["pair"] for r in rows], "violation": t.failure, "schedule": sched.to_dict()}
    return CheckReport(name, instance, "fail", t.slack, witness, {"pairs": rows})


# --- fuzzing ----------------------------------------------------------------------

GRID = 5
EPSILONS = (0.5, 1.0, 1.5, 2.0, 3.0)
S_VALUES = (0.0, 0.25, 0.5, 1.0, 2.0)


def _random_system(rng: random.Random, k: int) -> dict:
    cells = rng.sample([(x, y) for x in range(GRID) for y in range(GRID)], k)
    return {"coords": [list(c) for c in cells], "map": [rng.randrange(k) for _ in range(k)]}


def _random_subset(rng: random.Random, k: int, nonempty: bool = True) -> list[int]:
    while True:
        out = [i for i in range(k) if rng.random() < 0.5]
        if out or not nonempty:
            return out


def make_instance(seed: int, index: int, *, max_points: int = 12, max_n: int = 4) -> dict:
    """Random instance number ``index`` of the stream for ``seed``."""
    rng = random.Random(f"dimentropy-fuzz:{seed}:{index}")
    k = rng.randint(1, max_points)
    main = _random_system(rng, k)
    z = _random_subset(rng, k)
    z_sup = sorted(set(z) | set(_random_subset(rng, k, nonempty=False)))
    labels = {i: rng.randrange(3) for i in z}
    parts = [sorted(i for i in z if labels[i] == c) for c in range(3)]
    ka = rng.randint(1, min(6, max_points))
    kb = rng.randint(1, min(6, max_points))
    a, b = _random_system(rng, ka), _random_system(rng, kb)
    a["w"], b["w"] = _random_subset(rng, ka), _random_subset(rng, kb)
    n_max = rng.randint(1, max_n)
    return {
        "id": f"{seed}-{index}",
        "system": main,
        "z": z,
        "z_sup": z_sup,
        "z1": _random_subset(rng, k),
        "z2": _random_subset(rng, k),
        "parts": [p for p in parts if p],
        "a": a,
        "b": b,
        "n": rng.randint(1, max_n),
        "N": rng.randint(1, n_max),
        "n_max": n_max,
        "epsilons": sorted(rng.sample(EPSILONS, 3), reverse=True),
        "s_values": sorted(rng.sample(S_VALUES, 3)),
        "delta_factor": 0.1,
    }


def _build(spec: dict) -> FiniteSystem:
    k = len(spec["coords"])
    return FiniteSystem([f"p{i}" for i in range(k)], CoordMetric(spec["coords"], "chebyshev"), spec["map"], validate=False)


def _sub(sys: FiniteSystem, idx) -> SubsetRef:
    return SubsetRef(sys, frozenset(idx))


def _run_named(check: str, inst: dict) -> list[CheckReport]:
    sys = _build(inst["system"])
    sched = ScaleSchedule(N=inst["N"], n_max=inst["n_max"], epsilons=tuple(inst["epsilons"]))
    z = _sub(sys, inst["z"])
    iid = inst["id"]
    n, eps_list, s_list = inst["n"], inst["epsilons"], inst["s_values"]
    if check == "monotone_subset":
        return [check_monotone_subset(sys, z, _sub(sys, inst["z_sup"]), sched, s_list, instance=iid)]
    if check == "union_bounds":
        return [check_union_bounds(sys, _sub(sys, inst["z1"]), _sub(sys, inst["z2"]), n, e, instance=iid) for e in eps_list]
    if check == "product_spanning":
        a, b = _build(inst["a"]), _build(inst["b"])
        return [check_product_spanning(a, b, _sub(a, inst["a"]["w"]), _sub(b, inst["b"]["w"]), n, e, instance=iid) for e in eps_list]
    if check == "packing_to_cover":
        return [check_packing_to_cover(sys, z, n, e, inst["delta_factor"] * e, instance=iid) for e in eps_list]
    if check == "separated_vs_packing":
        return [
            check_separated_vs_packing(sys, z, inst["N"], e, s, inst["n_max"], instance=iid) for e in eps_list for s in s_list
        ]
    if check == "subadditivity":
        decomp = Decomposition(tuple(_sub(sys, p) for p in inst["parts"]))
        return [check_subadditivity(sys, z, decomp, sched, s_list, instance=iid)]
    if check == "greedy_spanning":
        return [check_greedy_spanning(sys, z, n, e, instance=iid) for e in eps_list]
    raise KeyError(check)


def _drop_point(spec: dict, p: int) -> dict:
    k = len(spec["coords"])
    keep = [i for i in range(k) if i != p]
    new = {old: i for i, old in enumerate(keep)}
    step = list(spec["map"])
    target = step[p] if step[p] != p else None
    out_map = []
    for i in keep:
        j = step[i]
        if j == p:
            j = target if target is not None else i
        out_map.append(new[j])
    out = dict(spec, coords=[spec["coords"][i] for i in keep], map=out_map)
    if "w" in spec:
        out["w"] = [new[i] for i in spec["w"] if i != p]
    return out


def _shrink_candidates(inst: dict):
    k = len(inst["system"]["coords"])

    def remap(idx, p):
        return [i - (i > p) for i in idx if i != p]

    if k > 1:
        for p in range(k):
            cand = dict(inst, system=_drop_point(inst["system"], p))
            for key in ("z", "z_sup", "z1", "z2"):
                cand[key] = remap(inst[key], p)
            cand["parts"] = [q for q in (remap(part, p) for part in inst["parts"]) if q]
            if cand["z"] and cand["z1"] and cand["z2"]:
                yield cand
    for key in ("a", "b"):
        ks = len(inst[key]["coords"])
        for p in range(ks if ks > 1 else 0):
            sub = _drop_point(inst[key], p)
            if sub["w"]:
                yield dict(inst, **{key: sub})
    if inst["n"] > 1:
        yield dict(inst, n=inst["n"] - 1)
    if inst["n_max"] > inst["N"]:
        yield dict(inst, n_max=inst["n_max"] - 1)
    if inst["N"] > 1:
        yield dict(inst, N=inst["N"] - 1, n_max=inst["n_max"] - 1)


def shrink(check: str, inst: dict, runner: Callable[[str, dict], list[CheckReport]] = _run_named) -> dict:
    """Greedily drop points and lower orders while the check keeps failing."""
    current = inst
    progress = True
    while progress:
        progress = False
        for cand in _shrink_candidates(current):
            if any(r.status == "fail" for r in runner(check, cand)):
                current = cand
                progress = True
                break
    return current


def run_instance(inst: dict, runner: Callable[[str, dict], list[CheckReport]] = _run_named) -> list[CheckReport]:
    """All fixed-scale checks on one fuzz instance, failures shrunk."""
    out = []
    for check in sorted(CHECKS):
        reports = runner(check, inst)
        if any(r.status == "fail" for r in reports):
            small = shrink(check, inst, runner)
            reports = [r for r in runner(check, small) if r.status == "fail"][:1]
            for r in reports:
                r.details["shrunk_from"] = inst["id"]
                r.details["instance"] = small
        out.extend(reports)
    return out


def fuzz(seed: int, count: int, *, max_points: int = 12, max_n: int = 4, threads: int = 1) -> list[CheckReport]:
    """Run every fixed-scale check on ``count`` random instances; deterministic in ``seed``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    instances = [make_instance(seed, i, max_points=max_points, max_n=max_n) for i in range(count)]
    results = parallel_map(run_instance, instances, threads)
    reports = [r for rs in results for r in rs]
    order = {inst["id"]: i for i, inst in enumerate(instances)}
    return sorted(reports, key=lambda r: (r.check, order.get(r.instance, -1)))


def system_checks(sys: FiniteSystem, z: SubsetRef, sched: ScaleSchedule, s_values=(0.0, 0.5, 1.0), instance: str = "system") -> list[CheckReport]:
    """The fixed-scale battery on a given system (exact solvers; small systems only)."""
    full = sys.full()
    reports = [check_monotone_subset(sys, z, full, sched, s_values, instance=instance)]
    orbit = Decomposition(tuple(SubsetRef(sys, frozenset([i])) for i in sorted(z.members)))
    reports.append(check_subadditivity(sys, z, orbit, sched, s_values, instance=instance))
    for eps in sched.epsilons:
        for n in sched.n_values:
            reports.append(check_union_bounds(sys, z, full, n, eps, instance=instance))
            reports.append(check_packing_to_cover(sys, z, n, eps, instance=instance))
            reports.append(check_greedy_spanning(sys, z, n, eps, instance=instance))
            if len(sys) ** 2 <= 64:
                reports.append(check_product_spanning(sys, sys, z, z, n, eps, instance=instance))
        for s in s_values:
            reports.append(check_separated_vs_packing(sys, z, sched.N, eps, s, sched.n_max, instance=instance))
    return sorted(reports, key=lambda r: r.check)


def summarize(reports: list[CheckReport]) -> dict:
    by_check: dict[str, dict[str, int]] = {}
    for r in reports:
        c = by_check.setdefault(r.check, {"pass": 0, "fail": 0, "skip": 0})
        c[r.status] += 1
    return {
        "total": len(reports),
        "failed": sum(r.status == "fail" for r in reports),
        "checks": dict(sorted(by_check.items())),
    }
