"""groundgate command-line interface."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bench as bench_mod
from .calibration import apply_calibration, calibrate_detector, load_calibrations, save_calibrations
from .dataset import SPLIT_NAMES, assign_splits, dedup_queries, parse_ratios, partition, synth_adapt
from .detectors import DETECTOR_NAMES, THRESHOLDED, DetectorOptions, build_detector
from .error_analysis import (
    annotate_record,
    misclassification_breakdown,
    read_annotations,
    render_breakdown,
    write_annotations,
)
from .errors import ConfigurationError, GroundGateError, SchemaError
from .model import Label, SamplingConfig, read_records, write_records
from .prompts import TemplateStore
from .providers import Providers, load_providers

logger = logging.getLogger("groundgate")

EX_OK = 0
EX_RECORD_ERRORS = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_IOERR = 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--providers", type=Path, help="provider config (prov.json); default: bundled mocks")
    p.add_argument("--templates", type=Path, help="directory overriding bundled prompt templates")
    p.add_argument("--parallelism", type=int, default=4, help="max concurrent provider calls (default 4)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    names = ", ".join(DETECTOR_NAMES)
    parser = _Parser(
        prog="groundgate",
        description="Groundedness detectors for retrieval-augmented answers, with calibration and benchmarking.",
        epilog=f"detectors: {names}",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    common = [_common()]

    p = sub.add_parser("detect", parents=common, help="run one detector over records")
    p.add_argument("--detector", required=True, help=f"one of: {names}")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--calibration", type=Path, help="calibration JSON from `calibrate` or `bench`")
    p.add_argument("--out", required=True, type=Path)
    _detector_flags(p)

    p = sub.add_parser("calibrate", parents=common, help="pick a detector's threshold on a labeled split")
    p.add_argument("--detector", required=True, help=f"one of: {names}")
    p.add_argument("--split", required=True, type=Path, help="labeled JSONL (normally dev)")
    p.add_argument("--out", required=True, type=Path)
    _detector_flags(p)

    p = sub.add_parser("bench", parents=common, help="calibrate, evaluate and time detectors")
    p.add_argument("--detectors", default="all", help=f"'all' or comma list of: {names}")
    p.add_argument("--dev", required=True, type=Path)
    p.add_argument("--test", type=Path)
    p.add_argument("--calibration", type=Path, help="reuse these thresholds instead of calibrating")
    p.add_argument("--no-latency", action="store_true", help="skip the sequential timing pass")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    _detector_flags(p)

    p = sub.add_parser("split", parents=common, help="query-grouped train/dev/test split")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--ratios", default="70:10:20")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dedup", action="store_true", help="drop records whose normalized query repeats")
    p.add_argument("--out", required=True, type=Path, help="output directory")

    p = sub.add_parser("synth", parents=common, help="make ungrounded variants of grounded records")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--temperature", type=float, default=0.0)

    p = sub.add_parser("annotate", parents=common, help="label error types of ungrounded records")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("report", parents=common, help="misclassification breakdown by error type")
    p.add_argument("--verdicts", required=True, type=Path, help="output of `detect`")
    p.add_argument("--annotations", required=True, type=Path, help="output of `annotate`")
    p.add_argument("--out", required=True, type=Path)
    return parser


def _detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strict", action="store_true", help="treat degenerate cases as errors")
    p.add_argument("--samples", type=int, default=3, help="multigen sample count k")
    p.add_argument("--pair-granularity", choices=("sentence", "full_context"), default="sentence")


# helpers


def _providers(args) -> Providers:
    return load_providers(args.providers).throttled(args.parallelism)


def _options(args) -> DetectorOptions:
    templates = TemplateStore(args.templates) if args.templates else None
    return DetectorOptions(
        sampling=SamplingConfig(k=args.samples),
        strict=args.strict,
        pair_granularity=args.pair_granularity,
        parallelism=args.parallelism,
        templates=templates,
    )


def _check_detector(name: str) -> None:
    if name not in DETECTOR_NAMES:
        raise UsageError(f"unknown detector {name!r}; valid detectors: {', '.join(DETECTOR_NAMES)}")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_jsonl(path: Path, rows) -> None:
    _write_text(path, "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows))


# subcommands


def cmd_detect(args) -> int:
    _check_detector(args.detector)
    records = read_records(args.input)
    det = build_detector(args.detector, _providers(args), _options(args))
    if args.calibration:
        cals = load_calibrations(args.calibration)
        if args.detector in cals:
            det = apply_calibration(det, cals[args.detector])
        elif det.thresholded:
            logger.warning("no calibration for %s in %s; using default threshold", det.name, args.calibration)
    outcomes = bench_mod.evaluate_records(det, records, args.parallelism)
    _write_jsonl(
        args.out,
        (o.to_dict(det.name, r.gold_label.value) for r, o in zip(records, outcomes)),
    )
    failed = sum(not o.ok for o in outcomes)
    if failed:
        logger.error("%d of %d records failed", failed, len(records))
        return EX_RECORD_ERRORS
    return EX_OK


def cmd_calibrate(args) -> int:
    _check_detector(args.detector)
    if args.detector not in THRESHOLDED:
        raise UsageError(f"{args.detector} has no threshold to calibrate")
    det = build_detector(args.detector, _providers(args), _options(args))
    result = calibrate_detector(det, read_records(args.split))
    existing = load_calibrations(args.out) if args.out.exists() else {}
    existing[args.detector] = result
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_calibrations(args.out, existing)
    print(f"{args.detector}: threshold={result.threshold:.6g} macro_f1={result.objective_value:.3f}")
    return EX_OK


def _detector_list(spec: str) -> list[str]:
    if spec == "all":
        return list(DETECTOR_NAMES)
    names = [s.strip() for s in spec.split(",") if s.strip()]
    for n in names:
        _check_detector(n)
    if not names:
        raise UsageError("--detectors is empty")
    return names


def cmd_bench(args) -> int:
    names = _detector_list(args.detectors)
    providers = _providers(args)
    options = _options(args)
    splits = {"dev": read_records(args.dev)}
    if args.test:
        splits["test"] = read_records(args.test)
    cals = load_calibrations(args.calibration) if args.calibration else None
    detectors = [build_detector(n, providers, options) for n in names]
    report = bench_mod.run_benchmark(
        detectors, splits, cals, parallelism=args.parallelism, measure=not args.no_latency
    )
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "report.md", bench_mod.emit_report(report, "markdown_table"))
    _write_text(out / "report.csv", bench_mod.emit_report(report, "csv"))
    _write_text(out / "scatter.json", bench_mod.emit_report(report, "scatter_json"))
    save_calibrations(out / "calibration.json", {r.name: r.calibration for r in report.rows if r.calibration})
    print(bench_mod.emit_report(report, "markdown_table"), end="")
    return EX_OK


def cmd_split(args) -> int:
    try:
        ratios = parse_ratios(args.ratios)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(ratios) != len(SPLIT_NAMES):
        raise UsageError(f"--ratios needs {len(SPLIT_NAMES)} parts (train:dev:test)")
    records = read_records(args.input)
    if args.dedup:
        records = dedup_queries(records)
    assignment = assign_splits(records, ratios, args.seed)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "splits.json", json.dumps(assignment, indent=2, sort_keys=True) + "\n")
    parts = partition(records, assignment)
    for name in SPLIT_NAMES:
        write_records(out / f"{name}.jsonl", parts.get(name, []))
        print(f"{name}: {len(parts.get(name, []))} records")
    return EX_OK


def cmd_synth(args) -> int:
    providers = _providers(args)
    store = TemplateStore(args.templates) if args.templates else TemplateStore()
    tpl = store.get("synth_adapt")
    made, failed = [], 0
    for rec in read_records(args.input):
        if rec.gold_label is not Label.GROUNDED:
            logger.info("%s: not Grounded; skipped", rec.record_id)
            continue
        try:
            made.append(synth_adapt(rec, providers.chat, tpl, args.temperature))
        except GroundGateError as exc:
            failed += 1
            logger.warning("%s: %s", rec.record_id, exc)
    write_records(args.out, made)
    print(f"adapted {len(made)} records, {failed} rejected or failed")
    return EX_RECORD_ERRORS if failed else EX_OK


def cmd_annotate(args) -> int:
    providers = _providers(args)
    store = TemplateStore(args.templates) if args.templates else TemplateStore()
    done, failed = [], 0
    for rec in read_records(args.input):
        if rec.gold_label is not Label.UNGROUNDED:
            logger.info("%s: not Ungrounded; skipped", rec.record_id)
            continue
        try:
            done.append(annotate_record(rec, providers.chat, providers.chat_b, store))
        except GroundGateError as exc:
            failed += 1
            logger.warning("%s: %s", rec.record_id, exc)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_annotations(args.out, done)
    print(f"annotated {len(done)} records, {failed} failed")
    return EX_RECORD_ERRORS if failed else EX_OK


def cmd_report(args) -> int:
    annotations = read_annotations(args.annotations)
    agreed = {a.record_id: a.agreement.agreed for a in annotations}
    verdicts: dict[str, bool] = {}
    with open(args.verdicts, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            if row.get("gold_label") == Label.UNGROUNDED.value and row.get("outcome") == "verdict":
                verdicts[row["record_id"]] = bool(row["grounded"])
    missing = [k for k in verdicts if k not in agreed]
    if missing:
        logger.warning("%d verdicts have no annotation and are left out", len(missing))
        verdicts = {k: v for k, v in verdicts.items() if k in agreed}
    rows = misclassification_breakdown(verdicts, agreed)
    note = ""
    if any(a.annotator_b_mode == "perturbed_template" for a in annotations):
        note = "Note: the second annotator reused the first provider with a reworded template."
    _write_text(args.out, render_breakdown(rows, note))
    print(render_breakdown(rows, note), end="")
    return EX_OK


COMMANDS = {
    "detect": cmd_detect,
    "calibrate": cmd_calibrate,
    "bench": cmd_bench,
    "split": cmd_split,
    "synth": cmd_synth,
    "annotate": cmd_annotate,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"{exc}", file=sys.stderr)
        return EX_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EX_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.parallelism < 1:
        print("groundgate: --parallelism must be >= 1", file=sys.stderr)
        return EX_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigurationError) as exc:
        print(f"groundgate: {exc}", file=sys.stderr)
        return EX_USAGE
    except (SchemaError, json.JSONDecodeError) as exc:
        print(f"groundgate: bad input: {exc}", file=sys.stderr)
        return EX_DATAERR
    except OSError as exc:
        print(f"groundgate: {exc}", file=sys.stderr)
        return EX_IOERR


if __name__ == "__main__":
    sys.exit(main())
