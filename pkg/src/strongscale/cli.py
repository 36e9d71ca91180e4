"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import anomaly, planner, plotting, runstore, scaling_model, synth
from .logparse import LogParseError, format_log, load_log, timer_consistency
from .records import ValidationError, group_series

log = logging.getLogger("strongscale")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3
DEFAULT_STORE = "strongscale-store.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, text: str, payload) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text)
    if getattr(args, "out", None) and args.command not in ("synth", "plot"):
        runstore.atomic_write(args.out, json.dumps(payload, indent=2) + "\n")


def _load_series(args):
    return group_series(runstore.load_store(args.store))


# ---------------------------------------------------------------------------
# ingest


def cmd_ingest(args) -> int:
    records = runstore.load_store(args.store) if args.append and Path(args.store).exists() else []
    for path in args.paths:
        loaded = runstore.load_records(path, args.input_format)
        if not loaded:
            log.warning("%s contains no records", path)
        records.extend(loaded)
    runstore.save_store(args.store, records)
    if args.csv_out:
        runstore.atomic_write(args.csv_out, runstore.write_csv(records))
    doc = runstore.store_document(records)
    lines = [f"stored {len(records)} record(s) in {len(doc['series'])} series -> {args.store}"]
    for s in doc["series"]:
        lines.append(f"  {s['problem_id']}: P={s['ranks']}")
    _emit(args, "\n".join(lines), {"store": str(args.store), "records": len(records), "series": doc["series"]})
    return EXIT_OK


# ---------------------------------------------------------------------------
# knee


def _knee_payload(series, points, result) -> dict:
    return {
        "problem_id": series.problem_id,
        "n": series.n,
        "points": [asdict(p) for p in points],
        "knee": {
            "eta_target": result.eta_target,
            "n_at_target": result.n_at_target,
            "P_at_target": result.P_at_target,
            "P_int": result.P_int,
            "t_at_target": result.t_at_target,
            "extrapolated": result.extrapolated,
            "bracketing_P": [p.P for p in result.bracketing_points],
            "diagnostics": list(result.diagnostics),
        },
        "work_rate": scaling_model.fit_work_rate(series),
    }


def cmd_knee(args) -> int:
    series = runstore.select_series(_load_series(args), args.series)
    points = scaling_model.efficiency_series(series, args.dof_multiplier)
    result = scaling_model.knee(series, args.eta_target, args.dof_multiplier)
    lines = [f"series {series.problem_id}", f"{'P':>8} {'n/P':>12} {'eta':>8} {'MDOFS':>10} {'t_step':>12}"]
    for p in points:
        lines.append(f"{p.P:>8d} {p.n_over_P:>12.4g} {p.eta:>8.3f} {p.mdofs:>10.4g} {p.t_step:>12.4e}")
    lines.append(
        f"knee at eta={result.eta_target:g}: n/P = {result.n_at_target:.4g}, "
        f"P = {result.P_at_target:.4g}, t_step = {result.t_at_target:.4e} s"
    )
    if result.extrapolated:
        lines.append("extrapolated: no measured crossing of the target; clamped to the nearest point")
    lines.extend(f"note: {d}" for d in result.diagnostics)
    _emit(args, "\n".join(lines), _knee_payload(series, points, result))
    return EXIT_OK


# ---------------------------------------------------------------------------
# plan


def cmd_plan(args) -> int:
    work_rate = args.work_rate
    t_step = args.t_step
    if args.series:
        series = runstore.select_series(_load_series(args), args.series)
        knee = scaling_model.knee(series, args.eta_target, args.dof_multiplier)
        if work_rate is None and t_step is None:
            work_rate = scaling_model.fit_work_rate(series)
    elif args.n_at_target is not None:
        knee = args.n_at_target
    else:
        raise UsageError("plan needs --series or --n-at-target")
    if work_rate is None and t_step is None:
        raise UsageError("plan needs --work-rate or --t-step when no series is given")
    if work_rate is not None and t_step is not None:
        raise UsageError("give only one of --work-rate and --t-step")

    plans = planner.sweep(
        args.n, knee, args.ranks_per_node, args.steps, work_rate, eta_target=args.eta_target, t_step_est=t_step
    )
    lines = [
        f"{'n':>14} {'P':>8} {'nodes':>10} {'t_step':>11} {'node-hours':>12} {'whole nodes':>11} {'node-hours':>12}"
    ]
    for p in plans:
        lines.append(
            f"{p.n:>14d} {p.P_target:>8d} {p.nodes:>10.3f} {p.t_step_est:>11.4e} {p.node_hours:>12.4f} "
            f"{p.nodes_whole:>11d} {p.node_hours_whole:>12.4f}"
        )
    _emit(args, "\n".join(lines), [asdict(p) for p in plans])
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare-logs


def cmd_compare_logs(args) -> int:
    a, b = load_log(args.log_a), load_log(args.log_b)
    rows = anomaly.section_regression(a, b, args.threshold)
    only_a, only_b = anomaly.missing_sections(a, b)
    lines = [f"sections changed by >= {args.threshold:g}x:"]
    flagged = [r for r in rows if r.flagged]
    if not flagged:
        lines.append("  none")
    for r in flagged:
        lines.append(f"  {r.label:<48} {r.t_a:>12.5e}s {r.t_b:>12.5e}s  {r.ratio:>7.3f}x")

    lines.append("")
    lines.append("kernels (GFLOPS):")
    for i, (ka, kb) in enumerate(zip(a.kernels, b.kernels)):
        name = f"{ka.kernel} N={ka.N} {ka.precision}"
        lines.append(f"  {name:<20} {ka.gflops:>8g} {ka.variant:<5} {kb.gflops:>8g} {kb.variant:<5}")
    lines.append("")
    lines.append("bandwidth probes (GB/s/rank):")
    for pa, pb in zip(a.probes, b.probes):
        lines.append(f"  {pa.mode:<10} {pa.bibw_gb_per_s_per_rank:>8.1f} {pb.bibw_gb_per_s_per_rank:>8.1f}")
    if a.aggregate_flops and b.aggregate_flops:
        lines.append("")
        lines.append(f"aggregate flop/s: {a.aggregate_flops:.6g} -> {b.aggregate_flops:.6g}")
    for label, paths in (("only in A", only_a), ("only in B", only_b)):
        if paths:
            lines.append(f"{label}: " + ", ".join("/".join(p) for p in paths))

    payload = {
        "threshold": args.threshold,
        "regressions": [{**asdict(r), "path": list(r.path)} for r in rows],
        "only_a": ["/".join(p) for p in only_a],
        "only_b": ["/".join(p) for p in only_b],
        "kernels": [{"a": asdict(ka), "b": asdict(kb)} for ka, kb in zip(a.kernels, b.kernels)],
        "probes": [{"a": asdict(pa), "b": asdict(pb)} for pa, pb in zip(a.probes, b.probes)],
        "aggregate_flops": [a.aggregate_flops, b.aggregate_flops],
    }
    _emit(args, "\n".join(lines), payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# divisibility / speedup


def cmd_divisibility(args) -> int:
    series = runstore.select_series(_load_series(args), args.series)
    split = anomaly.rank_divisibility(series.records, args.divisor, args.slowdown_threshold)
    if split.slowdown is None:
        verdict = "slowdown undefined (one class is empty)"
    else:
        verdict = f"slowdown {split.slowdown:.3f}x" + (" FLAGGED" if split.flagged else "")
    lines = [
        f"series {series.problem_id}, divisor {split.divisor}",
        f"  aligned P:    {split.aligned.ranks}",
        f"  misaligned P: {split.misaligned.ranks}",
        f"  {verdict}",
    ]
    payload = {
        "divisor": split.divisor,
        "aligned": split.aligned.ranks,
        "misaligned": split.misaligned.ranks,
        "slowdown": split.slowdown,
        "ratios": list(split.ratios),
        "flagged": split.flagged,
    }
    _emit(args, "\n".join(lines), payload)
    return EXIT_OK


def _parse_claims(items) -> dict[str, float]:
    claims = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--claimed expects PLATFORM=VALUE, got {item!r}")
        k, v = item.rsplit("=", 1)
        try:
            claims[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"--claimed value {v!r} is not a number") from None
    return claims


def cmd_speedup(args) -> int:
    records = runstore.load_store(args.store)
    if args.n is not None:
        records = [r for r in records if r.n == args.n]
    if args.ranks is not None:
        records = [r for r in records if r.P == args.ranks]
    refs = [r for r in records if r.platform == args.reference]
    if len(refs) != 1:
        raise ValidationError(f"expected one {args.reference} record, found {len(refs)}; narrow with --n/--ranks")
    rows = anomaly.platform_speedup(refs[0], records, _parse_claims(args.claimed))
    lines = [f"{'platform':<14} {'t_step':>10} {'computed':>9} {'claimed':>8}  status"]
    for r in rows:
        claim = "" if r.claimed_speedup is None else f"{r.claimed_speedup:.2f}"
        status = "ok" if r.consistent else "MISMATCH"
        lines.append(f"{r.platform:<14} {r.t_step:>10.3e} {r.computed_speedup:>9.3f} {claim:>8}  {status}")
    _emit(args, "\n".join(lines), [asdict(r) for r in rows])
    return EXIT_OK if all(r.consistent for r in rows) or not args.strict else EXIT_DATA


# ---------------------------------------------------------------------------
# plot / synth / parse-log


def cmd_plot(args) -> int:
    all_series = _load_series(args)
    if args.series:
        chosen = [runstore.select_series(all_series, sel) for sel in args.series]
    else:
        chosen = all_series
    if not chosen:
        raise ValidationError("nothing to plot: the store has no series")
    spec = plotting.build_spec(args.kind, chosen, args.dof_multiplier, args.eta_target, ideal=not args.no_ideal)
    out = Path(args.out)
    svg_path = out.with_suffix(".svg")
    csv_path = out.with_suffix(".csv")
    runstore.atomic_write(svg_path, plotting.render_svg(spec))
    runstore.atomic_write(csv_path, plotting.points_csv(spec))
    _emit(args, f"wrote {svg_path} and {csv_path}", {"svg": str(svg_path), "csv": str(csv_path)})
    return EXIT_OK


def _rank_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_synth(args) -> int:
    model = synth.CostModel(a=args.a, b=args.b, c=args.c, noise_rel=args.noise, seed=args.seed)
    config = [t for t in (args.config or "").split(";") if t]
    series = synth.generate(
        model, args.n, args.P, platform=args.platform, config=config, ranks_per_node=args.ranks_per_node
    )
    text = runstore.write_csv(series.records)
    if args.out:
        runstore.atomic_write(args.out, text)
        log.info("wrote %d records to %s", len(series), args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_parse_log(args) -> int:
    report = load_log(args.path)
    if args.format == "text":
        sys.stdout.write(format_log(report))
        for w in timer_consistency(report):
            print(f"warning: {w}", file=sys.stderr)
        print(f"skipped {report.skipped_lines} line(s)", file=sys.stderr)
    else:
        print(report.to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--store", default=d(DEFAULT_STORE), help="JSON run store (default: %(default)s)")
    p.add_argument("--format", choices=("text", "json"), default=d("text"))
    p.add_argument("--eta-target", type=float, default=d(0.8))
    p.add_argument("--dof-multiplier", type=int, choices=(1, 4), default=d(1))
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strongscale", description="Strong-scaling analysis of HPC run records and solver logs.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        _add_globals(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "load CSV/JSON run records into the store")
    p.add_argument("paths", nargs="+")
    p.add_argument("--input-format", choices=("auto", "csv", "json"), default="auto")
    p.add_argument("--append", action="store_true", help="add to the existing store instead of replacing it")
    p.add_argument("--csv-out", help="also write the normalized records as CSV")

    p = add("knee", cmd_knee, "efficiency table and knee for one series")
    p.add_argument("--series", required=True, help="selector, e.g. platform=Crusher,n=95011000")
    p.add_argument("--out", help="write the JSON report here as well")

    p = add("plan", cmd_plan, "rank count and node-hours for a campaign")
    p.add_argument("--n", type=int, action="append", required=True, help="gridpoints (repeat for a sweep)")
    p.add_argument("--series", help="derive the knee and work rate from this series")
    p.add_argument("--n-at-target", type=float, help="known knee, gridpoints per rank")
    p.add_argument("--work-rate", type=float, help="seconds per gridpoint per rank-step")
    p.add_argument("--t-step", type=float, help="time per step at the knee, seconds")
    p.add_argument("--ranks-per-node", type=int, required=True)
    p.add_argument("--steps", type=int, required=True, help="number of timesteps in the campaign")
    p.add_argument("--out")

    p = add("compare-logs", cmd_compare_logs, "section-by-section comparison of two logfiles")
    p.add_argument("log_a")
    p.add_argument("log_b")
    p.add_argument("--threshold", type=float, default=1.5)
    p.add_argument("--out")

    p = add("divisibility", cmd_divisibility, "slowdown of rank counts not divisible by a divisor")
    p.add_argument("--series", required=True)
    p.add_argument("--divisor", type=int, default=8)
    p.add_argument("--slowdown-threshold", type=float, default=1.25)
    p.add_argument("--out")

    p = add("speedup", cmd_speedup, "platform speedups from t_step against claimed values")
    p.add_argument("--reference", required=True, help="reference platform name")
    p.add_argument("--n", type=int)
    p.add_argument("--ranks", type=int)
    p.add_argument("--claimed", action="append", metavar="PLATFORM=VALUE")
    p.add_argument("--strict", action="store_true", help="exit 2 if any claim is inconsistent")
    p.add_argument("--out")

    p = add("plot", cmd_plot, "log-log SVG plot plus CSV of the plotted points")
    p.add_argument("--kind", choices=plotting.KINDS, required=True)
    p.add_argument("--series", action="append", help="selector (repeatable); default is every series")
    p.add_argument("--out", required=True, help="output path; .svg and .csv are written next to each other")
    p.add_argument("--no-ideal", action="store_true", help="omit ideal-scaling guides")

    p = add("synth", cmd_synth, "generate a synthetic series as a run-record CSV")
    p.add_argument("--a", type=float, required=True, help="seconds per gridpoint")
    p.add_argument("--b", type=float, default=0.0, help="fixed seconds per step")
    p.add_argument("--c", type=float, default=0.0, help="seconds per log2(P)")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--P", type=_rank_list, required=True, help="comma-separated rank counts")
    p.add_argument("--platform", default="synthetic")
    p.add_argument("--config", help="semicolon-separated tags")
    p.add_argument("--ranks-per-node", type=int, default=8)
    p.add_argument("--out")

    p = add("parse-log", cmd_parse_log, "dump a parsed logfile as JSON")
    p.add_argument("path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; every argparse error goes through _Parser.error.
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"strongscale: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, LogParseError, LookupError, ValueError, json.JSONDecodeError) as exc:
        print(f"strongscale: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"strongscale: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
