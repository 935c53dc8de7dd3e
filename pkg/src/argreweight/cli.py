"""Command line entry point: ``argreweight {run,sweep-report,check-bounds,parse-dem}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .config import ConfigError, FileSource, RepetitionSource, SurfaceSource, load_config
from .decoders.base import BruteForceCapError, DecodingError, NotMatchableError
from .error_model import DemSyntaxError, canonicalize, format_dem, parse_dem
from .metrics import RateEstimate, check_conditional_bounds, reachable_syndromes, suppression_factor

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_BOUND = 0, 1, 2, 3

log = logging.getLogger("argreweight")


class UsageError(Exception):
    """Bad input detected by a subcommand; maps to exit status 1."""


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# --- run ---------------------------------------------------------------------


def cmd_run(args) -> int:
    from .harness import run_experiment

    config, base = load_config(args.config)
    config = config.with_overrides(base, seed=args.seed, shots=args.shots, workers=args.workers, output=args.out)
    doc = run_experiment(config, base)
    _emit(dump_json(doc), config.output)
    return EXIT_OK


# --- sweep-report ------------------------------------------------------------

REPORT_COLUMNS = (
    "code", "decoder", "criterion", "rule", "z", "b", "shots", "accepted", "logical_errors",
    "rejection_rate", "sigma_rejection", "p_L", "sigma_L", "suppression_factor", "suppression_sigma",
)


def _finite(x: float):
    return x if math.isfinite(x) else None


def _counts(row) -> RateEstimate:
    return RateEstimate(row["shots"], row["accepted"], row["logical_errors"])


def _row(code, decoder, criterion, rule, z, b, est: RateEstimate, base: RateEstimate) -> dict:
    f, fs = suppression_factor(base, est)
    return {
        "code": code, "decoder": decoder, "criterion": criterion, "rule": rule, "z": z, "b": b,
        "shots": est.shots, "accepted": est.accepted, "logical_errors": est.logical_errors,
        "rejection_rate": est.rejection_rate, "sigma_rejection": est.sigma_rejection,
        "p_L": est.p_L, "sigma_L": est.sigma_L,
        "suppression_factor": _finite(f), "suppression_sigma": _finite(fs),
    }


def sweep_report(docs: list[dict]) -> dict:
    """Merge results documents into one plot-data table.

    Rows are keyed by (code, decoder, criterion, b). Documents sharing a seed
    saw the same shot stream, so a repeated key from them is kept once;
    repeated keys from different seeds pool their counts.
    """
    if not docs:
        raise UsageError("need at least one results document")
    ids = {d["model"]["id"] for d in docs}
    if len(ids) != 1:
        labels = sorted({d["model"]["label"] for d in docs})
        raise UsageError(f"documents come from different models: {', '.join(labels)}")
    merged: dict[tuple, dict] = {}
    for d in docs:
        code, dec, seed = d["model"]["label"], d["decoder"], d["config"]["seed"]
        entries = [((code, dec, "baseline", None), None, None, _counts(d["baseline"]))]
        entries += [((code, dec, r["criterion"], r["b"]), r["rule"], r["z"], _counts(r)) for r in d["rows"]]
        for key, rule, z, est in entries:
            slot = merged.get(key)
            if slot is None:
                merged[key] = {"rule": rule, "z": z, "est": est, "seeds": {seed}}
            elif seed not in slot["seeds"]:
                slot["est"] = slot["est"] + est
                slot["seeds"].add(seed)
    bases = {k[:2]: v["est"] for k, v in merged.items() if k[2] == "baseline"}
    rows = [
        _row(k[0], k[1], k[2], v["rule"], v["z"], k[3], v["est"], bases[k[:2]])
        for k, v in merged.items()
    ]
    rows.sort(key=lambda r: (r["rejection_rate"], r["criterion"] != "baseline", r["criterion"], r["b"] or 0.0))
    return {"schema_version": 1, "model_id": ids.pop(), "columns": list(REPORT_COLUMNS), "rows": rows}


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=report["columns"], lineterminator="\n")
    w.writeheader()
    for r in report["rows"]:
        w.writerow({k: "" if r[k] is None else r[k] for k in report["columns"]})
    return buf.getvalue()


def cmd_sweep_report(args) -> int:
    docs = []
    for p in args.results:
        try:
            docs.append(json.loads(Path(p).read_text()))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{p}: not a results document ({exc})") from None
    report = sweep_report(docs)
    if args.out is None:
        sys.stdout.write(report_csv(report))
    else:
        out = Path(args.out)
        out.with_suffix(".csv").write_text(report_csv(report))
        out.with_suffix(".json").write_text(dump_json(report))
    return EXIT_OK


# --- check-bounds ------------------------------------------------------------

_BUILDERS = {"repetition": RepetitionSource, "surface": SurfaceSource}


def _scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def resolve_model_source(source: str):
    """A DEM path, or ``builder:key=value,...`` such as ``repetition:distance=3,p_data=0.1``."""
    kind, sep, params = source.partition(":")
    if sep and kind in _BUILDERS:
        kw = {}
        for item in filter(None, params.split(",")):
            key, eq, value = item.partition("=")
            if not eq:
                raise UsageError(f"expected key=value, got {item!r}")
            kw[key.strip()] = _scalar(value.strip())
        try:
            src = _BUILDERS[kind](kind=kind, **kw)
        except ValidationError as exc:
            raise UsageError("; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors())) from None
        try:
            return src.build(), src.label()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"no such model file or builder: {source}")
    return FileSource(kind="file", path=str(path)).build(), path.name


def cmd_check_bounds(args) -> int:
    model, label = resolve_model_source(args.model)
    reports = [check_conditional_bounds(model, s) for s in reachable_syndromes(model)]
    violations = sum(not r.holds for r in reports)
    doc = {
        "schema_version": 1,
        "model": label,
        "num_syndromes": len(reports),
        "violations": violations,
        "reports": [r.as_dict() for r in reports],
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    if violations:
        log.error("%d of %d syndromes violate a bound", violations, len(reports))
        return EXIT_BOUND
    return EXIT_OK


# --- parse-dem ---------------------------------------------------------------


def cmd_parse_dem(args) -> int:
    text = Path(args.file).read_text()
    _emit(format_dem(canonicalize(parse_dem(text))), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argreweight", description="Post-selection by argument reweighting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--seed", type=int)
    run.add_argument("--shots", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("sweep-report", help="merge results documents into plot data")
    rep.add_argument("results", nargs="+")
    rep.add_argument("--out", help="write OUT.csv and OUT.json instead of CSV on stdout")
    rep.set_defaults(func=cmd_sweep_report)

    cb = sub.add_parser("check-bounds", help="exact conditional error bounds for every syndrome")
    cb.add_argument("model", help="DEM file or builder spec, e.g. repetition:distance=3,p_data=0.1")
    cb.add_argument("--out")
    cb.set_defaults(func=cmd_check_bounds)

    pd = sub.add_parser("parse-dem", help="validate a DEM file and print its canonical form")
    pd.add_argument("file")
    pd.add_argument("--out")
    pd.set_defaults(func=cmd_parse_dem)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for path, msg in exc.errors:
            print(f"config error: {path}: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except DemSyntaxError as exc:
        print(f"dem error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UsageError, NotMatchableError, BruteForceCapError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DecodingError, OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
