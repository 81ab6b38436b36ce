"""Command-line interface.

Exit codes: 0 when every condition holds, 1 when a mathematical condition
fails, 2 for configuration or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .analysis import (
    Classification,
    NormalizedConstants,
    classify,
    triple_envelopes,
)
from .catalog import NEGATIVE_CONTROL, DEMO_FIXTURES
from .errors import IncompatibleFamilyError, ScenarioError, TrichotomyError
from .operators import check_evolution_property
from .projections import FamilyPair, FamilyQuad, FamilyTriple, check_compat, check_compat3, max_pointwise_difference
from .scenario import Scenario, load_scenario, parse_scenario
from .transforms import CONSTRUCTIONS, TRANSFORMS, convert, family_spec, verify_family, verify_transport

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
CSV_COLUMNS = ["direction", "nu", "logN", "witness_t", "witness_s", "witness_t0", "witness_vec"]
INVERSE = {
    "triple->pair": "pair->triple",
    "pair->triple": "triple->pair",
    "triple->quad": "quad->triple",
    "quad->triple": "triple->quad",
}


@dataclass
class ReportDocument:
    command: str
    exit_code: int
    scenario: dict | None = None
    reports: list[dict] = field(default_factory=list)
    envelopes: list[dict] = field(default_factory=list)
    classification: dict | None = None
    transforms: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    tool: str = "trichotomy"
    version: str = __version__
    duration_s: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        return cls(**json.loads(text))


# -- commands -----------------------------------------------------------------


def _kw(sc: Scenario, workers: int) -> dict:
    return {"norm": sc.norm, "grid": sc.grid, "tol": sc.tol, "dimension": sc.dimension, "workers": workers}


def cmd_check(sc: Scenario, workers: int = 1) -> ReportDocument:
    evo = check_evolution_property(sc.operator, sc.grid, sc.tol, sc.norm, sc.dimension, workers)
    compat = check_compat(sc.family, sc.operator, **_kw(sc, workers))
    ok = evo.passed and compat.passed
    return ReportDocument(
        "check", EXIT_OK if ok else EXIT_VIOLATION, sc.echo, [evo.to_dict(), compat.to_dict()]
    )


def _constants_for(sc: Scenario):
    if sc.constants is None:
        raise ScenarioError("constants", "this command needs constants")
    if isinstance(sc.family, FamilyTriple):
        return sc.constants
    return sc.normalized_constants()


def cmd_verify(sc: Scenario, workers: int = 1) -> ReportDocument:
    c = _constants_for(sc)
    try:
        rep = verify_family(sc.operator, sc.family, c, floor=sc.zero_floor, **_kw(sc, workers))
    except IncompatibleFamilyError as exc:
        return ReportDocument("verify", EXIT_VIOLATION, sc.echo, [exc.report.to_dict()], extra={"refused": str(exc)})
    return ReportDocument("verify", EXIT_OK if rep.passed else EXIT_VIOLATION, sc.echo, [rep.to_dict()])


def _as_triple(sc: Scenario) -> FamilyTriple:
    fam = sc.family
    if isinstance(fam, FamilyPair):
        return convert("pair->triple", fam, grid=sc.grid, dimension=sc.dimension)
    if isinstance(fam, FamilyQuad):
        return convert("quad->triple", fam, grid=sc.grid, dimension=sc.dimension)
    return fam


def csv_table(envelopes) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for env in envelopes:
        for row in env.csv_rows():
            w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def cmd_estimate(sc: Scenario, workers: int = 1) -> tuple[ReportDocument, str]:
    reports = []
    try:
        triple = _as_triple(sc)
    except IncompatibleFamilyError as exc:
        doc = ReportDocument("estimate", EXIT_OK, sc.echo, [exc.report.to_dict()], classification={"verdict": "incompatible"})
        return doc, csv_table([])
    envs = triple_envelopes(
        sc.operator, triple, sc.norm, sc.grid, sc.nu_grid, sc.dimension, workers, sc.zero_floor
    )
    if all(e.vacuous for e in envs):
        verdict = Classification("vacuous", envelopes=envs).to_dict()
    else:
        compat = check_compat3(triple, sc.operator, **_kw(sc, workers))
        reports.append(compat.to_dict())
        if compat.passed:
            verdict = classify(
                sc.operator, triple, sc.norm, sc.grid, sc.nu_grid, sc.n_ceiling,
                sc.dimension, workers, sc.zero_floor, check=False, envelopes=envs,
            ).to_dict()
        else:
            verdict = {"verdict": "incompatible"}
    doc = ReportDocument(
        "estimate", EXIT_OK, sc.echo, reports, [e.to_dict() for e in envs], classification=verdict
    )
    return doc, csv_table(envs)


def cmd_convert(sc: Scenario, construction: str, workers: int = 1) -> ReportDocument:
    source_type, _ = TRANSFORMS[construction]
    if not isinstance(sc.family, source_type):
        raise ScenarioError("family.type", f"{construction} needs a {source_type.arity} family, got {sc.family.arity}")
    kw = {"norm": sc.norm, "grid": sc.grid, "tol": sc.tol, "dimension": sc.dimension}
    try:
        target = convert(construction, sc.family, op=sc.operator, materialize_output=True, **kw)
    except IncompatibleFamilyError as exc:
        return ReportDocument("convert", EXIT_VIOLATION, sc.echo, [exc.report.to_dict()], extra={"refused": str(exc)})
    compat = check_compat(target, sc.operator, **_kw(sc, workers))
    back = convert(INVERSE[construction], target, grid=sc.grid, dimension=sc.dimension)
    round_trip = max_pointwise_difference(back, sc.family, sc.grid, sc.dimension)
    converted = dict(sc.echo)
    converted["family"] = family_spec(target, sc.dimension)
    extra = {
        "converted_scenario": converted,
        "round_trip": {"construction": INVERSE[construction], "max_difference": round_trip},
    }
    ok = compat.passed
    reports = [compat.to_dict()]
    if sc.constants is not None:
        tr = verify_transport(sc.operator, sc.family, construction, sc.normalized_constants(), floor=sc.zero_floor, **_kw(sc, workers))
        extra["transport"] = tr.to_dict()
        reports += [tr.source.to_dict(), tr.target.to_dict()]
        ok = ok and tr.consistent
    return ReportDocument(
        "convert", EXIT_OK if ok else EXIT_VIOLATION, sc.echo, reports,
        transforms=[target.provenance.to_dict()], extra=extra,
    )


def _demo_row(name: str, sc: Scenario, expect_pass: bool, workers: int) -> tuple[dict, list, list, list]:
    check = cmd_check(sc, workers)
    verify = cmd_verify(sc, workers)
    estimate, _ = cmd_estimate(sc, workers)
    transforms, transports = [], []
    compat_ok = check.reports[1]["passed"]
    if compat_ok:
        fam = sc.family
        pair = convert("triple->pair", fam, op=sc.operator, grid=sc.grid, dimension=sc.dimension, tol=sc.tol, norm=sc.norm)
        quad = convert("triple->quad", fam, op=sc.operator, grid=sc.grid, dimension=sc.dimension, tol=sc.tol, norm=sc.norm)
        steps = [("triple->pair", fam), ("pair->triple", pair), ("triple->quad", fam), ("quad->triple", quad)]
        c = sc.normalized_constants()
        for construction, source in steps:
            tr = verify_transport(sc.operator, source, construction, c, floor=sc.zero_floor, **_kw(sc, workers))
            transforms.append(tr.family.provenance.to_dict())
            transports.append(tr.to_dict())
    transport_ok = bool(transports) and all(t["consistent"] for t in transports)
    verified = verify.exit_code == EXIT_OK
    row = {
        "fixture": name,
        "check": "pass" if check.exit_code == EXIT_OK else "FAIL",
        "verify": "pass" if verified else "FAIL",
        "classification": estimate.classification["verdict"],
        "transport": ("pass" if transport_ok else "FAIL") if transports else "skipped",
        "expected": "pass" if expect_pass else "fail",
        "failed": ",".join(
            e["condition"] for r in check.reports + verify.reports for e in r["entries"] if not e["passed"]
        ),
    }
    if expect_pass:
        row["status"] = "ok" if (check.exit_code == EXIT_OK and verified and transport_ok) else "UNEXPECTED"
    else:
        row["status"] = "ok" if not verified else "UNEXPECTED"
    required = None
    for env in estimate.envelopes:
        if env["direction"] == "center-upper" and not env["vacuous"]:
            pts = [p for p in env["points"] if p["nu"] == 2.0]
            required = pts[0]["logN"] if pts else None
    row["center_logN_at_nu0_2"] = required
    reports = check.reports + verify.reports + estimate.reports
    return row, reports, estimate.envelopes, transforms + [{"transport": t} for t in transports]


def cmd_demo(overrides: dict | None = None, workers: int = 1) -> ReportDocument:
    """Check, verify, estimate and convert every built-in fixture."""
    rows, reports, envelopes, transforms = [], [], [], []
    fixtures = [(k, v, True) for k, v in DEMO_FIXTURES.items()] + [("negative_control", NEGATIVE_CONTROL, False)]
    for name, raw, expect in fixtures:
        sc = parse_scenario(raw, overrides)
        row, reps, envs, trs = _demo_row(name, sc, expect, workers)
        rows.append(row)
        reports += [dict(r, fixture=name) for r in reps]
        envelopes += [dict(e, fixture=name) for e in envs]
        transforms += [dict(t, fixture=name) for t in trs]
    ok = all(r["status"] == "ok" for r in rows)
    return ReportDocument(
        "demo", EXIT_OK if ok else EXIT_VIOLATION, None, reports, envelopes,
        transforms=transforms, extra={"summary": rows, "overrides": {k: v for k, v in (overrides or {}).items() if v is not None}},
    )


def summary_table(rows: list[dict]) -> str:
    cols = ["fixture", "check", "verify", "classification", "transport", "expected", "status", "center_logN_at_nu0_2", "failed"]
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _cell(v) -> str:
    if v is None or v == "":
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}" if math.isfinite(v) else str(v)
    return str(v)


# -- argument handling ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--norm", choices=["L1", "L2", "LInf"], help="override the scenario norm")
    common.add_argument("--t-max", type=float, dest="t_max", help="override grid.t_max")
    common.add_argument("--seed", type=int, help="override grid.seed")
    common.add_argument("--tol", type=float, help="override tolerances.tol")
    common.add_argument("--out", type=Path, help="write the JSON report here")
    common.add_argument("--csv", type=Path, help="write the envelope table here (estimate)")
    common.add_argument("--workers", type=int, default=1, help="worker threads for grid sweeps")

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--scenario", type=Path, required=True, help="scenario JSON file")

    parser = argparse.ArgumentParser(prog="trichotomy", description="Evolution-operator trichotomy checks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common, scen], help="composition law, idempotency, compatibility")
    sub.add_parser("verify", parents=[common, scen], help="inequalities for the scenario constants")
    sub.add_parser("estimate", parents=[common, scen], help="feasible-constant envelopes and classification")
    conv = sub.add_parser("convert", parents=[common, scen], help="transform the family tuple")
    conv.add_argument("--construction", required=True, choices=CONSTRUCTIONS)
    sub.add_parser("demo", parents=[common], help="run every built-in fixture")
    return parser


def _print_doc(doc: ReportDocument) -> None:
    print(f"{doc.command}: exit {doc.exit_code}")
    for rep in doc.reports:
        verdict = "PASS" if rep["passed"] else "FAIL"
        print(f"  {rep['kind']:<12} {verdict}  (norm {rep['norm']})")
        for e in rep["entries"]:
            if e["vacuous"]:
                print(f"    {e['condition']:<18} vacuous")
            elif not e["passed"]:
                print(f"    {e['condition']:<18} FAIL witness={e['witness']} lhs={e['lhs']!r} rhs={e['rhs']!r}")
    if doc.classification is not None:
        print(f"  classification: {doc.classification['verdict']}", end="")
        c = doc.classification.get("constants")
        if c:
            print(f"  N={c['N']:.6g} nu={c['nu']:.6g} nu0={c['nu0']:.6g}", end="")
        print()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    started = time.perf_counter()
    overrides = {"norm": args.norm, "t_max": args.t_max, "seed": args.seed, "tol": args.tol}
    csv_text = None
    try:
        if args.workers < 1:
            raise ScenarioError("--workers", "must be >= 1")
        if args.command == "demo":
            doc = cmd_demo(overrides, args.workers)
        else:
            sc = load_scenario(args.scenario, overrides)
            if args.command == "check":
                doc = cmd_check(sc, args.workers)
            elif args.command == "verify":
                doc = cmd_verify(sc, args.workers)
            elif args.command == "estimate":
                doc, csv_text = cmd_estimate(sc, args.workers)
            else:
                doc = cmd_convert(sc, args.construction, args.workers)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrichotomyError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # exit codes are restricted to 0/1/2
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    doc.duration_s = time.perf_counter() - started

    if args.command == "demo":
        print(summary_table(doc.extra["summary"]))
        print(f"demo: exit {doc.exit_code}")
    else:
        _print_doc(doc)
    try:
        if args.out is not None:
            args.out.write_text(doc.to_json())
        if csv_text is not None and args.csv is not None:
            args.csv.write_text(csv_text)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return doc.exit_code


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
