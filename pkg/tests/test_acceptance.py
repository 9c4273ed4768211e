"""Acceptance criteria 1-8, one test each, each printing a PASS/FAIL line.

Every criterion produces a JSON result document (timings excluded); the
determinism criterion recomputes all of them and compares bytes.
"""

from __future__ import annotations

import json
import math
import random
import time

import numpy as np
import pytest

from dimentropy.builtins import resolve
from dimentropy.caratheodory import bowen_entropy_estimate, bowen_outer_measure, packing_entropy_estimate, packing_premeasure
from dimentropy.capacity import capacity_entropy_estimate, max_separated_exact, min_spanning_exact
from dimentropy.cli import main, product_pairs
from dimentropy.core import FiniteSystem, example_extension
from dimentropy.estimates import ScaleSchedule
from dimentropy.io import dumps
from dimentropy.symbolic import (
    CylinderSet,
    SftSpec,
    count_words,
    periodic_points,
    product_cylinders,
    product_sft,
    sft_entropy_exact,
)
from dimentropy.verify import check_theorem_products

import oracles

LOG2 = math.log(2)
RESULTS: dict[int, str] = {}
TIMES: dict[int, float] = {}


def report(capsys, k: int, ok: bool, note: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'} {note}")


def run_cli(argv: list[str], path) -> tuple[int, dict, float]:
    t0 = time.perf_counter()
    code = main(argv + ["--out", str(path)])
    elapsed = time.perf_counter() - t0
    return code, json.loads(path.read_text()), elapsed


def crit1(tmp) -> dict:
    code, doc, elapsed = run_cli(["entropy", "capacity", "--system", "full2"], tmp / "c1.json")
    whole = doc["estimate"]["diagnostics"]["whole_space"]
    full2 = resolve("full2")[0]
    counts_ok = all(count_words(full2, n) == 2**n for n in range(1, 41))
    ok = (
        code == 0
        and abs(doc["estimate"]["value"] - LOG2) <= 1e-9
        and abs(whole["power_method"] - LOG2) <= 1e-9
        and abs(whole["power_method"] - doc["estimate"]["value"]) <= 1e-9
        and counts_ok
    )
    TIMES[1] = elapsed
    return {"ok": ok, "run": doc, "counts_ok": counts_ok}


def transfer_counts(alphabet_size: int, forbidden_pairs, n: int) -> int:
    a = np.ones((alphabet_size, alphabet_size), dtype=object)
    for i, j in forbidden_pairs:
        a[i, j] = 0
    v = np.ones(alphabet_size, dtype=object)
    for _ in range(n - 1):
        v = a @ v
    return int(v.sum())


def crit2(tmp) -> dict:
    code, doc, _ = run_cli(["entropy", "capacity", "--system", "goldenmean", "--n-max", "40"], tmp / "c2.json")
    golden = resolve("goldenmean")[0]
    target = math.log((1 + math.sqrt(5)) / 2)
    enum = oracles.words_by_extension(2, [(1, 1)], 20)
    rows = []
    for n in range(1, 21):
        rows.append([n, len(enum[n]), count_words(golden, n), transfer_counts(2, [(1, 1)], n)])
    # the extension enumeration against the plain product enumeration
    plain_ok = all(len(oracles.words(2, [(1, 1)], n)) == len(enum[n]) for n in range(1, 13))
    counts_ok = all(r[1] == r[2] == r[3] for r in rows)
    ok = code == 0 and abs(doc["estimate"]["value"] - target) <= 1e-6 and counts_ok and plain_ok
    return {"ok": ok, "run": doc, "counts": rows, "plain_ok": plain_ok}


def crit3(tmp) -> dict:
    f2, f3 = resolve("full2")[0], resolve("full3")[0]
    whole = sft_entropy_exact(product_sft(f2, f3))
    rep = check_theorem_products([(f2, f3)], ScaleSchedule(N=1, n_max=40))
    row = rep.details["pairs"][0]
    equal = {k: row[k]["equal"] for k in "BPU"}
    ok = abs(whole.value - math.log(6)) <= 1e-9 and rep.status == "pass" and all(equal.values())
    return {"ok": ok, "whole_space": whole.to_dict(), "report": rep.to_dict(), "equal": equal}


def crit4(tmp) -> dict:
    t0 = time.perf_counter()
    code = main(["verify", "all", "--seed", "1", "--count", "200", "--out", str(tmp / "c4.json")])
    TIMES[4] = time.perf_counter() - t0
    doc = json.loads((tmp / "c4.json").read_text())
    fuzz = [r for r in doc["reports"] if r["check"] != "theorem_products"]
    checks = sorted({r["check"] for r in fuzz})
    ok = code == 0 and doc["summary"]["failed"] == 0 and len({r["instance"] for r in fuzz}) == 200
    return {"ok": ok, "checks": checks, "report": doc}


def crit5(tmp) -> dict:
    rng = random.Random("acceptance-oracle")
    mismatches, rows = [], []
    for t in range(50):
        k = rng.randint(1, 6)
        table, step = oracles.random_system(rng, k)
        z = sorted(rng.sample(range(k), rng.randint(1, k)))
        n_max = rng.randint(1, 3)
        N = rng.randint(1, n_max)
        n = rng.randint(1, 3)
        eps = rng.choice([0.5, 1.0, 1.5, 2.0])
        s = rng.choice([0.0, 0.5, 1.0, 2.0])
        sys = FiniteSystem(range(k), np.array(table), step)
        zz = sys.subset(z)
        sched = ScaleSchedule(N=N, n_max=n_max, epsilons=(eps,))
        cover = bowen_outer_measure(sys, zz, s, sched)
        pack = packing_premeasure(sys, zz, s, sched)
        got = [
            len(max_separated_exact(sys, zz, n, eps)),
            len(min_spanning_exact(sys, zz, n, eps)),
            cover.value,
            pack.value,
        ]
        want = [
            oracles.max_separated(table, step, z, n, eps),
            oracles.min_spanning(table, step, z, n, eps),
            oracles.cover_value(table, step, z, s, N, n_max, eps)[0],
            oracles.packing_value(table, step, z, s, N, n_max, eps)[0],
        ]
        exact = cover.optimal and pack.optimal
        if got != want or not exact:
            mismatches.append(t)
        rows.append({"trial": t, "k": k, "n": n, "N": N, "n_max": n_max, "eps": eps, "s": s, "got": got, "want": want})
    return {"ok": not mismatches, "mismatches": mismatches, "trials": rows}


def symbolic_instances():
    out = []
    for name in ("full2", "full3", "goldenmean"):
        spec, subs = resolve(name)
        out.append((name, spec, None))
        out.extend((f"{name}{label}", spec, z) for label, z in sorted(subs.items()))
    for a, b in product_pairs():
        (sa, za), (sb, zb) = (x if isinstance(x, tuple) else (x, CylinderSet.full(x)) for x in (a, b))
        prod = product_sft(sa, sb)
        out.append((f"{sa.name}x{sb.name}", prod, product_cylinders(za, zb, prod)))
    return out


def crit6(tmp) -> dict:
    sched = ScaleSchedule(N=1, n_max=40)
    rows, ok = [], True
    for label, spec, z in symbolic_instances():
        b = bowen_entropy_estimate(spec, z, sched).bracket
        p = packing_entropy_estimate(spec, z, sched).bracket
        u = capacity_entropy_estimate(spec, z, sched).bracket
        good = b[0] <= p[1] and p[0] <= u[1] and b[0] <= u[1]
        ok &= good
        rows.append({"instance": label, "B": list(b), "P": list(p), "U": list(u), "ordered": good})
    return {"ok": ok, "instances": rows}


def crit7(tmp) -> dict:
    x = periodic_points(SftSpec.full(2), 13)
    z, embedded = example_extension(x, 5)
    sched = ScaleSchedule(N=6, n_max=12, epsilons=(0.5, 0.25))
    hx = capacity_entropy_estimate(x, None, sched)
    he = capacity_entropy_estimate(z, embedded, sched)
    hz = capacity_entropy_estimate(z, None, sched)
    ok = abs(he.value - hx.value) <= 1e-6 and LOG2 - 0.02 <= hz.value <= LOG2 + 0.1
    return {"ok": ok, "X": hx.to_dict(), "embedded": he.to_dict(), "Z": hz.to_dict(), "points": len(z)}


CRITERIA = {1: crit1, 2: crit2, 3: crit3, 4: crit4, 5: crit5, 6: crit6, 7: crit7}


def evaluate(k: int, tmp) -> dict:
    doc = CRITERIA[k](tmp)
    RESULTS[k] = dumps(doc)
    return doc


def test_criterion_1_full_shift(tmp_path, capsys):
    doc = evaluate(1, tmp_path)
    ok = doc["ok"] and TIMES[1] < 1.0
    report(capsys, 1, ok, f"h={doc['run']['estimate']['value']!r} time={TIMES[1]:.3f}s")
    assert ok


def test_criterion_2_golden_mean(tmp_path, capsys):
    doc = evaluate(2, tmp_path)
    report(capsys, 2, doc["ok"], f"h={doc['run']['estimate']['value']!r} words(20)={doc['counts'][-1][1]}")
    assert doc["ok"]


def test_criterion_3_product_equality(tmp_path, capsys):
    doc = evaluate(3, tmp_path)
    report(capsys, 3, doc["ok"], f"h={doc['whole_space']['value']!r} equal={doc['equal']}")
    assert doc["ok"]


def test_criterion_4_fuzz_suite(tmp_path, capsys):
    doc = evaluate(4, tmp_path)
    ok = doc["ok"] and TIMES[4] < 60.0
    summary = doc["report"]["summary"]
    report(capsys, 4, ok, f"total={summary['total']} failed={summary['failed']} time={TIMES[4]:.1f}s")
    assert ok


def test_criterion_5_oracle_equivalence(tmp_path, capsys):
    doc = evaluate(5, tmp_path)
    report(capsys, 5, doc["ok"], f"trials=50 mismatches={doc['mismatches']}")
    assert doc["ok"]


def test_criterion_6_entropy_order(tmp_path, capsys):
    doc = evaluate(6, tmp_path)
    report(capsys, 6, doc["ok"], f"instances={len(doc['instances'])}")
    assert doc["ok"]


@pytest.mark.slow
def test_criterion_7_example_extension(tmp_path, capsys):
    doc = evaluate(7, tmp_path)
    note = f"X={doc['X']['value']!r} embedded={doc['embedded']['value']!r} Z={doc['Z']['value']!r}"
    report(capsys, 7, doc["ok"], note)
    assert doc["ok"]


@pytest.mark.slow
def test_criterion_8_determinism(tmp_path, capsys):
    first = dict(RESULTS)
    for k in CRITERIA:
        # criteria not yet run in this session (e.g. a -k selection) are computed here
        if k not in first:
            first[k] = dumps(CRITERIA[k](tmp_path))
    again = tmp_path / "b"
    again.mkdir()
    differ = [k for k in CRITERIA if dumps(CRITERIA[k](again)) != first[k]]
    report(capsys, 8, not differ, f"criteria compared={len(CRITERIA)} differing={differ}")
    assert not differ
