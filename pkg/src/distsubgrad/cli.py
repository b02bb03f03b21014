"""Command-line front end.

    distsubgrad validate CONFIG
    distsubgrad run CONFIG [--out DIR] [--seed N] [--rounds N]
    distsubgrad presets
    distsubgrad run-preset NAME [--out DIR] [--seed N] [--rounds N]

Exit codes: 0 success (or expected failure confirmed), 1 validation
failure, 2 runtime abort, 3 threshold failure.  ``DISTSUBGRAD_OUT`` sets the
default output root.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

from . import __version__
from .config import (ConfigError, Experiment, build_experiment, load_raw, parse_text,
                     solve_oracle, validate_experiment, with_overrides)
from .engine import EngineAbort, run
from .report import ValidationReport

EXIT_OK, EXIT_INVALID, EXIT_ABORT, EXIT_THRESHOLD = 0, 1, 2, 3
ENV_OUT = "DISTSUBGRAD_OUT"


# ---------------------------------------------------------------------------
# presets

def _preset_dir():
    return resources.files("distsubgrad") / "presets"


def list_presets() -> list[tuple[str, str]]:
    """``(name, description)`` of every bundled preset, sorted by name."""
    out = []
    for entry in sorted(_preset_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".toml"):
            raw = parse_text(entry.read_text(encoding="utf-8"), entry.name)
            out.append((entry.name[:-5], raw.get("description", "")))
    return out


def preset_text(name: str) -> str:
    entry = _preset_dir() / f"{name}.toml"
    if not entry.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    return entry.read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# operations

def validate_text(text: str, source: str = "<string>") -> ValidationReport:
    """Pure function of the config bytes."""
    exp = build_experiment(parse_text(text, source))
    return validate_experiment(exp)


def validate(path) -> ValidationReport:
    return validate_text(Path(path).read_text(encoding="utf-8"), str(path))


def check_thresholds(exp: Experiment, summary: dict) -> list[dict]:
    """Compare final metrics with the config's declared thresholds."""
    gap_key = ("final_projected_objective_gap" if exp.problem.constrained
               else "final_objective_gap")
    lookup = {
        "consensus_diameter": "final_consensus_diameter",
        "objective_gap": gap_key,
        "dist_to_opt": "final_dist_to_opt",
        "max_local_infeasibility": "max_local_infeasibility_all_rounds",
    }
    results = []
    for name, limit in exp.thresholds.items():
        if name not in lookup:
            raise ConfigError(f"unknown threshold {name!r}")
        value = summary.get(lookup[name])
        ok = value is not None and not math.isnan(value) and value <= float(limit)
        results.append({"metric": name, "value": value, "threshold": float(limit), "met": ok})
    return results


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def run_experiment_raw(raw: dict, out_dir=None, seed=None, rounds=None,
                       log=print) -> int:
    raw = with_overrides(raw, seed=seed, rounds=rounds)
    exp = build_experiment(raw)
    report = validate_experiment(exp)
    if not report.passed:
        log(report.summary())
        return EXIT_INVALID

    out = Path(out_dir or exp.output.get("directory")
               or Path(os.environ.get(ENV_OUT, "runs")) / exp.name)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        oracle = solve_oracle(exp)
        trace = run(exp.run_config(oracle))
    except (EngineAbort, RuntimeError, FloatingPointError) as exc:
        log(f"runtime abort: {exc}")
        return EXIT_ABORT

    results = check_thresholds(exp, trace.summary)
    all_met = all(r["met"] for r in results)
    if exp.expect_failure:
        status = "expected-failure confirmed" if not all_met else "expected failure NOT observed"
        code = EXIT_OK if not all_met else EXIT_THRESHOLD
    else:
        status = "pass" if all_met else "threshold failure"
        code = EXIT_OK if all_met else EXIT_THRESHOLD

    summary = {
        "name": exp.name,
        "status": status,
        "config": raw,
        "schedule_class": trace.summary["schedule_class"],
        "validation": [{"check": c.name, "passed": c.passed, "waived": c.waived,
                        "message": c.message} for c in report.checks],
        "final": trace.summary,
        "thresholds": results,
        "oracle": oracle.to_dict() if oracle is not None else None,
    }
    (out / "trace.csv").write_text(trace.to_csv(), encoding="utf-8")
    (out / "summary.json").write_text(
        json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    lines = [f"experiment: {exp.name}", f"status: {status}",
             f"schedule class: {trace.summary['schedule_class']}", ""]
    for r in results:
        mark = "ok " if r["met"] else "NOT"
        lines.append(f"[{mark}] {r['metric']}: {r['value']!r} <= {r['threshold']!r}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "metadata.json").write_text(json.dumps({
        "started": started, "finished": time.time(), "version": __version__,
    }, indent=2) + "\n", encoding="utf-8")
    log("\n".join(lines))
    log(f"artifacts written to {out}")
    return code


def run_experiment(path, out_dir=None, seed=None, rounds=None, log=print) -> int:
    return run_experiment_raw(load_raw(path), out_dir, seed, rounds, log)


# ---------------------------------------------------------------------------
# argument parsing

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distsubgrad", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", help="check a config against every validator check")
    p.add_argument("path")
    for name, target in (("run", "path"), ("run-preset", "name")):
        p = sub.add_parser(name, help=f"run an experiment from a {target}")
        p.add_argument(target)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--rounds", type=int, default=None)
    sub.add_parser("presets", help="list bundled presets")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name, desc in list_presets():
                print(f"{name:28s} {desc}")
            return EXIT_OK
        if args.command == "validate":
            report = validate(args.path)
            print(report.summary())
            return EXIT_OK if report.passed else EXIT_INVALID
        if args.command == "run":
            return run_experiment(args.path, args.out, args.seed, args.rounds)
        raw = parse_text(preset_text(args.name), args.name)
        return run_experiment_raw(raw, args.out, args.seed, args.rounds)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
