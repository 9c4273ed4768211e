"""Command-line interface.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
3 a resource cap was exceeded.  Every error prints one line starting with
``dimentropy: error:``.  Result JSON is deterministic; the wall-clock time of
a run goes to a ``.meta.json`` sidecar next to ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io as _stdio
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .builtins import resolve
from .capacity import capacity_entropy_estimate
from .caratheodory import bowen_entropy_estimate, bowen_outer_measure, packing_entropy_estimate, packing_premeasure
from .core import FiniteSystem
from .errors import ContractError, DimentropyError, MetricError, ResourceCapError, SchemaError
from .estimates import ScaleSchedule
from .io import dumps, sft_from_dict, system_from_dict
from .symbolic import CylinderSet, SftSpec

PROG = "dimentropy"
SFT_N_MAX = 40
FINITE_N_MAX = 8

CAPACITY_COLUMNS = ["n", "epsilon", "r_lower", "r_upper", "exact_flag", "spanning_count"]
SCALE_COLUMNS = ["epsilon", "N", "s_critical", "value_at_crossing", "optimal_flag", "n_max"]
REPORT_COLUMNS = ["run_id", "system", "subset", "kind", "epsilon", "n", "log_r", "N", "s_critical"]


class UsageError(DimentropyError):
    """Bad flags or inputs; exit code 2."""


@dataclass
class RunConfig:
    system: str
    subset: str | None
    schedule: ScaleSchedule
    units: str = "nats"
    fmt: str = "json"
    out: str | None = None
    seed: int = 0
    trust_metric: bool = False

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "subset": self.subset,
            "schedule": self.schedule.to_dict(),
            "units": self.units,
            "seed": self.seed,
        }

    @property
    def run_id(self) -> str:
        return hashlib.sha256(dumps(self.to_dict()).encode()).hexdigest()[:12]


# --- loading ---------------------------------------------------------------------


def load_target(source: str, subset: str | None, *, trust_metric: bool = False):
    """``(target, z)``: a built-in name or a JSON file, plus the named subset (or ``None``)."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise UsageError(f"system file not found: {source}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{source}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
        if not isinstance(data, dict):
            raise SchemaError(f"{source}: expected a JSON object")
        if "alphabet" in data:
            target, subsets = sft_from_dict(data)
        else:
            target, subsets = system_from_dict(data, validate=not trust_metric)
    else:
        target, subsets = resolve(source)
    if subset is None:
        return target, None
    if subset not in subsets:
        known = ", ".join(sorted(subsets)) or "none"
        raise UsageError(f"unknown subset {subset!r} (available: {known})")
    return target, subsets[subset]


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc
    if not vals:
        raise UsageError("empty number list")
    return vals


def make_schedule(args, target) -> ScaleSchedule:
    symbolic = isinstance(target, SftSpec)
    n_max = args.n_max if args.n_max is not None else (SFT_N_MAX if symbolic else FINITE_N_MAX)
    fields = dict(N=args.n_min, n_max=n_max, s_lo=args.s_lo, s_hi=args.s_hi, tol=args.tol, threads=args.threads)
    if args.eps is not None:
        fields["epsilons"] = tuple(sorted(_floats(args.eps), reverse=True))
    if getattr(args, "ladder", None) is not None:
        fields["ladder"] = args.ladder
    try:
        return ScaleSchedule(**fields)
    except ValueError as exc:
        raise UsageError(f"invalid schedule: {exc}") from exc


def _config(args) -> tuple[RunConfig, object, object]:
    target, z = load_target(args.system, args.subset, trust_metric=getattr(args, "trust_metric", False))
    sched = make_schedule(args, target)
    cfg = RunConfig(args.system, args.subset, sched, "bits" if args.bits else "nats", args.format, args.out, args.seed)
    return cfg, target, z


# --- output -----------------------------------------------------------------------


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = _stdio.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def _emit(text: str, out: str | None, suffix: str = "") -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out + suffix) if suffix else Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _sidecar(out: str | None, started: float, argv: list[str]) -> None:
    if out is None:
        return
    meta = {"argv": argv, "version": __version__, "started": started, "elapsed_s": time.time() - started}
    Path(out + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _estimate(kind: str, target, z, sched: ScaleSchedule):
    fn = {"capacity": capacity_entropy_estimate, "bowen": bowen_entropy_estimate, "packing": packing_entropy_estimate}[kind]
    return fn(target, z, sched)


def _run_document(cfg: RunConfig, kind: str, est) -> dict:
    return {"run_id": cfg.run_id, "config": cfg.to_dict(), "kind": kind, "estimate": est.to_dict(cfg.units)}


# --- subcommands -------------------------------------------------------------------


def cmd_entropy(args) -> int:
    """Estimate one entropy: JSON to ``--out`` (or stdout) and per-scale CSV beside it."""
    started = time.time()
    cfg, target, z = _config(args)
    kind = args.kind
    est = _estimate(kind, target, z, cfg.schedule)
    columns = CAPACITY_COLUMNS if kind == "capacity" else SCALE_COLUMNS
    if cfg.fmt == "csv":
        _emit(_csv(est.scales, columns), cfg.out)
    else:
        _emit(dumps(_run_document(cfg, kind, est)), cfg.out)
        if cfg.out is not None:
            _emit(_csv(est.scales, columns), cfg.out, ".csv")
    _sidecar(cfg.out, started, args.argv)
    _emit_families(args, kind, target, z, cfg.schedule, est)
    return 0


def cmd_table(args) -> int:
    """The per-scale CSV for ``capacity``, ``bowen`` or ``packing``."""
    args.format = "csv" if args.format is None else args.format
    return cmd_entropy(args)


def _emit_families(args, kind, target, z, sched: ScaleSchedule, est) -> None:
    path = getattr(args, "emit_cover", None) if kind == "bowen" else getattr(args, "emit_packing", None) if kind == "packing" else None
    if path is None:
        return
    families = []
    for row in est.scales:
        # the finest truncation: largest n_max for covers, largest N for packings
        finest = max(r["n_max"] if kind == "bowen" else r["N"] for r in est.scales if r["epsilon"] == row["epsilon"])
        if (row["n_max"] if kind == "bowen" else row["N"]) != finest:
            continue
        s, eps, N = row["s_critical"], row["epsilon"], row["N"]
        entry = {"epsilon": eps, "s": s, "N": N, "n_max": sched.n_max}
        if isinstance(target, SftSpec):
            from .symbolic import SymbolicScale, cylinder_cover_value, cylinder_packing_value

            cyl = CylinderSet.full(target) if z is None else z
            m = SymbolicScale.from_radius(eps).m
            fn = cylinder_cover_value if kind == "bowen" else cylinder_packing_value
            value, counts = fn(cyl, s, N, sched.n_max, m, with_counts=True)
            entry.update(value=value, optimal=True, order_counts={str(k): v for k, v in sorted(counts.items())})
        else:
            zz = target.full() if z is None else z
            sub = sched.replace(N=N)
            fn = bowen_outer_measure if kind == "bowen" else packing_premeasure
            entry.update(fn(target, zz, s, sub, eps).to_dict([str(p) for p in target.points]))
        families.append(entry)
    doc = {"kind": "cover" if kind == "bowen" else "packing", "system": args.system, "subset": args.subset, "families": families}
    Path(path).write_text(dumps(doc))


def _verify_out(args, doc: dict, summary_lines: list[str], started: float) -> None:
    out = args.out or "verify_report.json"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(dumps(doc))
    _sidecar(out, started, args.argv)
    for line in summary_lines:
        print(line)
    print(f"report: {out}")


def _summary_lines(reports) -> list[str]:
    from .verify import summarize

    s = summarize(reports)
    lines = [f"{name}: {c['pass']} pass, {c['fail']} fail, {c['skip']} skip" for name, c in s["checks"].items()]
    lines.append(f"total: {s['total']} reports, {s['failed']} failed")
    return lines


def _witness_files(reports, out: str) -> list[str]:
    paths = []
    for k, r in enumerate(x for x in reports if x.status == "fail"):
        p = Path(out).with_name(Path(out).stem + f".witness{k}.json")
        p.write_text(dumps(r.witness))
        paths.append(str(p))
    return paths


def product_pairs() -> list:
    """The shipped symbolic product instances."""
    f1, f2, f3 = (resolve(f"full{k}")[0] for k in (1, 2, 3))
    g, gsub = resolve("goldenmean")
    f2sub = resolve("full2")[1]
    return [
        (f2, f3),
        (g, f2),
        (f1, f1),
        ((g, gsub["[0]"]), f2),
        ((f2, f2sub["[1]"]), (g, gsub["[0]"])),
    ]


def cmd_verify(args) -> int:
    """``verify all`` (fuzz plus products), ``verify system`` or ``verify products``."""
    from .verify import check_theorem_products, fuzz, system_checks

    started = time.time()
    reports = []
    if args.what == "all":
        if args.count < 0:
            raise UsageError("--count must be >= 0")
        reports = fuzz(args.seed, args.count, threads=args.threads)
    if args.what == "products" or (args.what == "all" and args.count):
        sched = ScaleSchedule(N=1, n_max=args.n_max or SFT_N_MAX, threads=args.threads)
        reports.append(check_theorem_products(product_pairs(), sched, instance="symbolic"))
    if args.what == "system":
        if args.system is None:
            raise UsageError("verify system needs --system")
        target, z = load_target(args.system, args.subset, trust_metric=args.trust_metric)
        if not isinstance(target, FiniteSystem):
            raise UsageError("verify system needs a finite system")
        args.n_min = args.n_min or 1
        sched = make_schedule(args, target)
        s_values = _floats(args.s_values) if args.s_values else (0.0, 0.5, 1.0)
        reports = system_checks(target, target.full() if z is None else z, sched, s_values, instance=args.system)
    out = args.out or "verify_report.json"
    doc = {
        "command": f"verify {args.what}",
        "seed": args.seed,
        "count": args.count if args.what == "all" else None,
        "reports": [r.to_dict() for r in reports],
    }
    from .verify import summarize

    doc["summary"] = summarize(reports)
    lines = _summary_lines(reports)
    failed = [r for r in reports if r.status == "fail"]
    _verify_out(args, doc, lines, started)
    if failed:
        for p in _witness_files(reports, out):
            print(f"witness: {p}")
        return 1
    return 0


def cmd_replay(args) -> int:
    from .verify import replay

    try:
        witness = json.loads(Path(args.witness).read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"witness file not found: {args.witness}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{args.witness}: invalid JSON") from exc
    r = replay(witness)
    print(f"{r.check}: {r.status}")
    return 1 if r.status == "fail" else 0


def _report_rows(doc: dict, source: str) -> list[dict]:
    try:
        run_id, kind = doc["run_id"], doc["kind"]
        cfg, est = doc["config"], doc["estimate"]
        scales = est["scales"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{source}: not a run document (missing {exc})") from exc
    base = {"run_id": run_id, "system": cfg.get("system"), "subset": cfg.get("subset"), "kind": kind}
    rows = []
    for s in scales:
        row = dict(base, epsilon=s.get("epsilon"))
        if kind == "capacity":
            r = s.get("r_lower")
            if not isinstance(r, int) or r < 1:
                raise SchemaError(f"{source}: bad r_lower {r!r}")
            row.update(n=s.get("n"), log_r=math.log(r))
        else:
            row.update(N=s.get("N"), s_critical=s.get("s_critical"))
        rows.append(row)
    return rows


def cmd_report(args) -> int:
    """Merge run JSON files into one long CSV (``n`` vs ``log r_n``, ``epsilon`` vs ``s_critical``)."""
    rows = []
    for p in args.paths:
        try:
            doc = json.loads(Path(p).read_text())
        except FileNotFoundError as exc:
            raise UsageError(f"run file not found: {p}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{p}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
        if not isinstance(doc, dict):
            raise SchemaError(f"{p}: not a run document")
        rows.extend(_report_rows(doc, p))
    rows.sort(key=lambda r: (str(r["run_id"]), r["kind"]))
    _emit(_csv(rows, REPORT_COLUMNS), args.out)
    return 0


# --- parser ------------------------------------------------------------------------------


def _schedule_flags(p: argparse.ArgumentParser, *, system_required: bool = True) -> None:
    p.add_argument("--system", required=system_required, help="built-in name or JSON file")
    p.add_argument("--subset", help="named subset of the system (default: everything)")
    p.add_argument("--eps", help="comma-separated radii, e.g. 0.5,0.25")
    p.add_argument("--n-min", type=int, default=1, help="smallest order N")
    p.add_argument("--n-max", type=int, default=None, help=f"largest order (default {SFT_N_MAX} for shifts, {FINITE_N_MAX} otherwise)")
    p.add_argument("--s-lo", type=float, default=0.0)
    p.add_argument("--s-hi", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--ladder", type=int, default=None, help="number of truncation levels to extrapolate over")
    p.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", action="store_true", help="report entropies in bits")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--trust-metric", action="store_true", help="skip metric-axiom validation of a system file")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Dimensional entropies of subsets of dynamical systems.")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("entropy", help="estimate h^U, h^B or h^P")
    p.add_argument("kind", choices=["capacity", "bowen", "packing"])
    _schedule_flags(p)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--emit-cover", help="write the cover families at the crossings (bowen)")
    p.add_argument("--emit-packing", help="write the packing families at the crossings (packing)")
    p.set_defaults(func=cmd_entropy)

    for kind, extra in (("capacity", None), ("bowen", "--emit-cover"), ("packing", "--emit-packing")):
        p = sub.add_parser(kind, help=f"per-scale CSV for {kind}")
        _schedule_flags(p)
        p.add_argument("--format", choices=["json", "csv"], default=None)
        if extra:
            p.add_argument(extra, help="write the certified ball families as JSON")
        p.set_defaults(func=cmd_table, kind=kind)

    p = sub.add_parser("verify", help="run the inequality checks")
    p.add_argument("what", choices=["all", "system", "products"])
    _schedule_flags(p, system_required=False)
    p.add_argument("--count", type=int, default=100, help="number of fuzz instances")
    p.add_argument("--s-values", help="comma-separated exponents for verify system")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="re-run a stored witness")
    p.add_argument("witness")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="merge run JSON files into one CSV")
    p.add_argument("paths", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        args.argv = argv
        return args.func(args)
    except ResourceCapError as exc:
        print(f"{PROG}: resource-cap: {exc}", file=sys.stderr)
        return 3
    except (UsageError, SchemaError, MetricError, ContractError, ValueError) as exc:
        print(f"{PROG}: error: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{PROG}: error: {exc}".replace("\n", " "), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
