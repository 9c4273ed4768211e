from __future__ import annotations

import csv
import json
import math

import pytest

from dimentropy.cli import main

BROKEN = {"points": ["a", "b", "c"], "metric": {"table": [1, 10, 1]}, "map": ["a", "b", "c"]}


@pytest.fixture(autouse=True)
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def one_error_line(err: str, prefix: str = "dimentropy: error: ") -> bool:
    lines = err.strip().splitlines()
    return len(lines) == 1 and lines[0].startswith(prefix)


def test_entropy_capacity_full2(capsys):
    assert main(["entropy", "capacity", "--system", "full2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["estimate"]["value"] - math.log(2)) < 1e-12
    assert doc["kind"] == "capacity" and doc["config"]["schedule"]["n_max"] == 40


def test_entropy_writes_json_csv_and_sidecar(in_tmp):
    assert main(["entropy", "capacity", "--system", "goldenmean", "--n-max", "12", "--out", "g.json"]) == 0
    rows = list(csv.DictReader(open(in_tmp / "g.json.csv")))
    assert list(rows[0]) == ["n", "epsilon", "r_lower", "r_upper", "exact_flag", "spanning_count"]
    assert [int(r["r_lower"]) for r in rows[:4]] == [2, 3, 5, 8]
    meta = json.loads((in_tmp / "g.json.meta.json").read_text())
    assert "elapsed_s" in meta
    assert "elapsed" not in (in_tmp / "g.json").read_text()


def test_bits(capsys):
    assert main(["entropy", "capacity", "--system", "full2", "--bits"]) == 0
    assert json.loads(capsys.readouterr().out)["estimate"]["value"] == pytest.approx(1.0, abs=1e-12)


def test_missing_file(capsys):
    assert main(["entropy", "bowen", "--system", "nowhere.json"]) == 2
    assert one_error_line(capsys.readouterr().err)


def test_bad_schedule(capsys):
    assert main(["entropy", "bowen", "--system", "full2", "--n-min", "9", "--n-max", "4"]) == 2
    assert one_error_line(capsys.readouterr().err)


def test_unknown_subset_and_flag(capsys):
    assert main(["entropy", "bowen", "--system", "full2", "--subset", "nope"]) == 2
    assert one_error_line(capsys.readouterr().err)
    assert main(["entropy", "bowen", "--bogus"]) == 2
    assert one_error_line(capsys.readouterr().err)


def test_non_dyadic_symbolic_radius(capsys):
    assert main(["entropy", "bowen", "--system", "full2", "--eps", "0.3,0.2"]) == 2
    assert one_error_line(capsys.readouterr().err)


def test_resource_cap(capsys):
    assert main(["capacity", "--system", "periodic(full2,19)"]) == 3
    assert one_error_line(capsys.readouterr().err, "dimentropy: resource-cap: ")


def test_capacity_csv(capsys):
    assert main(["capacity", "--system", "full2", "--n-max", "5"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert [int(r["r_lower"]) for r in rows[:5]] == [2, 4, 8, 16, 32]


def test_bowen_csv_and_cover_dump(in_tmp, capsys):
    assert main(["bowen", "--system", "cycle_3", "--n-max", "6", "--emit-cover", "cover.json"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert {"epsilon", "N", "s_critical", "value_at_crossing", "optimal_flag"} <= set(rows[0])
    doc = json.loads((in_tmp / "cover.json").read_text())
    assert doc["kind"] == "cover" and doc["families"]
    assert all(f["optimal"] for f in doc["families"])


def test_packing_dump_symbolic(in_tmp):
    assert main(["packing", "--system", "goldenmean", "--n-max", "10", "--emit-packing", "p.json", "--out", "p.csv"]) == 0
    doc = json.loads((in_tmp / "p.json").read_text())
    assert doc["kind"] == "packing" and all("order_counts" in f for f in doc["families"])


def test_verify_all_small(in_tmp, capsys):
    assert main(["verify", "all", "--seed", "2", "--count", "5", "--out", "v.json"]) == 0
    out = capsys.readouterr().out
    assert "total:" in out and "report: v.json" in out
    doc = json.loads((in_tmp / "v.json").read_text())
    assert doc["summary"]["failed"] == 0 and doc["count"] == 5


def test_verify_count_zero(in_tmp):
    assert main(["verify", "all", "--count", "0", "--out", "v0.json"]) == 0
    assert json.loads((in_tmp / "v0.json").read_text())["reports"] == []


def test_verify_broken_metric_fixture(in_tmp, capsys):
    (in_tmp / "broken.json").write_text(json.dumps(BROKEN))
    # the loader refuses it unless told to trust the table
    assert main(["verify", "system", "--system", "broken.json", "--eps", "1", "--n-max", "1"]) == 2
    capsys.readouterr()
    code = main(["verify", "system", "--system", "broken.json", "--eps", "1", "--n-max", "1", "--trust-metric", "--out", "b.json"])
    assert code == 1
    lines = capsys.readouterr().out.splitlines()
    paths = [ln.split(": ", 1)[1] for ln in lines if ln.startswith("witness: ")]
    assert paths and all((in_tmp / p).exists() for p in paths)
    assert main(["replay", paths[0]]) == 1


def test_verify_system_good(in_tmp):
    (in_tmp / "ok.json").write_text(json.dumps(dict(BROKEN, metric={"table": [1, 2, 1]})))
    assert main(["verify", "system", "--system", "ok.json", "--eps", "1.5,0.5", "--n-max", "2"]) == 0


def test_report_merges_runs(in_tmp, capsys):
    assert main(["entropy", "capacity", "--system", "full2", "--n-max", "5", "--out", "a.json"]) == 0
    assert main(["entropy", "capacity", "--system", "full2", "--n-max", "6", "--out", "b.json"]) == 0
    assert main(["entropy", "bowen", "--system", "cycle_3", "--n-max", "5", "--out", "c.json"]) == 0
    capsys.readouterr()
    assert main(["report", "a.json"]) == 0
    single = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(single) == 10 and float(single[0]["log_r"]) == pytest.approx(math.log(2))
    assert main(["report", "a.json", "b.json", "c.json", "--out", "all.csv"]) == 0
    rows = list(csv.DictReader(open(in_tmp / "all.csv")))
    ids = [r["run_id"] for r in rows]
    assert len(set(ids)) == 3
    # rows of one run are contiguous
    assert all(ids.index(i) + ids.count(i) - 1 == len(ids) - 1 - ids[::-1].index(i) for i in set(ids))
    assert any(r["s_critical"] for r in rows if r["kind"] == "bowen")


def test_report_rejects_corrupt_json(in_tmp, capsys):
    (in_tmp / "bad.json").write_text("{oops")
    assert main(["report", "bad.json"]) == 2
    assert one_error_line(capsys.readouterr().err)
    (in_tmp / "notrun.json").write_text("{}")
    assert main(["report", "notrun.json"]) == 2


def test_identical_runs_are_byte_identical(in_tmp):
    for name in ("x.json", "y.json"):
        assert main(["entropy", "packing", "--system", "goldenmean", "--n-max", "16", "--out", name]) == 0
    assert (in_tmp / "x.json").read_bytes() == (in_tmp / "y.json").read_bytes()
