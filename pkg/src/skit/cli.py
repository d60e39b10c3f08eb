"""Command-line entry point.

Exit codes
----------
0   success
1   unexpected internal error
2   an assignment violates constraints (``verify``)
3   the allocation problem is infeasible or no detector is usable
64  bad input: unreadable or malformed files, unknown options or overrides

Every subcommand writes ``manifest.json`` into ``--out``. ``skit rerun
<manifest>`` repeats the recorded command after checking the input hashes;
all outputs except the wall-clock timings in the manifest are reproduced
byte for byte.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

from . import __version__

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("skit")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
EXIT_INFEASIBLE = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


# ----------------------------------------------------------------- helpers


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_config(path: Optional[str]) -> dict:
    """Optional TOML config with ``[alloc]``, ``[eval]`` and ``[pipeline]`` tables."""
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"config {path}: {exc}") from None
    unknown = set(cfg) - {"alloc", "eval", "pipeline"}
    if unknown:
        raise UsageError(f"config {path}: unknown tables {sorted(unknown)}")
    return cfg


class Run:
    """Collects what goes into the manifest while a subcommand runs."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out)
        self.inputs: dict = {}
        self.timings: dict = {}
        self.extra: dict = {}

    def input(self, path) -> Path:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"{path}: no such file")
        self.inputs[str(path)] = file_hash(p)
        return p

    def timed(self, stage):
        run = self

        class _T:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[stage] = run.timings.get(stage, 0.0) + time.perf_counter() - self.t0

        return _T()

    def manifest(self) -> dict:
        m = {
            "tool": "skit",
            "version": __version__,
            "subcommand": self.args.command if not getattr(self.args, "alloc_command", None) else f"alloc {self.args.alloc_command}",
            "argv": self.argv,
            "cwd": os.getcwd(),
            "inputs": self.inputs,
            "config": self.args.config_data,
            "seed": self.args.seed,
            "timings_s": {k: round(v, 6) for k, v in self.timings.items()},
        }
        m.update(self.extra)
        return m

    def write_manifest(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")


# -------------------------------------------------------------------- eval


def degrade(images: dict, level: float, rng: np.random.Generator) -> dict:
    """Drop each detection independently with probability ``level``.

    One uniform draw per detection, in file order, shared by every level;
    the kept sets are nested, so true positives can only decrease.
    """
    out = {}
    for image_id, by_class in images.items():
        out[image_id] = {}
        for cls, boxes in by_class.items():
            u = rng.random(len(boxes))
            out[image_id][cls] = [b for b, x in zip(boxes, u) if x >= level]
    return out


def _parse_levels(text: str) -> list[float]:
    try:
        levels = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--degrade expects comma-separated numbers, got {text!r}") from None
    if not levels or any(not 0.0 <= q < 1.0 for q in levels):
        raise UsageError("--degrade levels must lie in [0, 1)")
    return levels


def _class_mean(rows, metric, iou="0.50:0.95", area="all", max_det=100) -> float:
    vals = [r["value"] for r in rows if r["metric"] == metric and r["iou"] == iou and r["area"] == area and r["max_det"] == max_det]
    vals = [v for v in vals if not np.isnan(v)]
    return float(np.mean(vals)) if vals else float("nan")


def cmd_eval(run: Run) -> int:
    from .metrics import io as mio
    from .metrics.report import evaluate_detector, timing_stats

    a = run.args
    ecfg = a.config_data.get("eval", {})
    cutoff = a.cutoff if a.cutoff is not None else ecfg.get("cutoff")
    levels = _parse_levels(a.degrade) if a.degrade else [0.0]
    try:
        gts = mio.read_boxes(run.input(a.gt), require_score=False)
        dts = mio.read_boxes(run.input(a.det), require_score=True)
    except mio.BoxFileError as exc:
        raise UsageError(str(exc)) from None
    run.out.mkdir(parents=True, exist_ok=True)
    summary = []
    with run.timed("evaluate"):
        for q in levels:
            d = dts if q == 0.0 else degrade(dts, q, np.random.default_rng(0 if a.seed is None else a.seed))
            rows = evaluate_detector(gts, d, cutoff)
            name = "report.csv" if len(levels) == 1 else f"report_degrade_{q:g}.csv"
            mio.write_report(run.out / name, rows)
            olrp = _class_mean(rows, "oLRP", "0.50", "all", "all")
            summary.append({"level": q, "AP": _class_mean(rows, "AP"), "AR": _class_mean(rows, "AR"), "oLRP": olrp})
    with run.timed("timing"):
        stats = timing_stats(gts, dts)
    run.extra["eval_time_per_image_s"] = {k: round(v, 6) for k, v in stats.items()}
    with open(run.out / "degradation.csv", "w") as fh:
        fh.write("level,AP,AR,oLRP\n")
        for r in summary:
            fh.write(f"{r['level']:g},{r['AP']:.10g},{r['AR']:.10g},{r['oLRP']:.10g}\n")
    fragment = {
        "detectors": [
            {
                "id": a.name,
                "network": a.name,
                "olrp": [round(r["oLRP"], 10) for r in summary],
                "ar": [round(r["AR"], 10) for r in summary],
            }
        ]
    }
    (run.out / "profile.toml").write_text(
        "# accuracy per degradation level; add machine, time_ms and ram_mb before use\n" + tomli_w.dumps(fragment)
    )
    for r in summary:
        print(f"level {r['level']:g}: AP={r['AP']:.4f} AR={r['AR']:.4f} oLRP={r['oLRP']:.4f}")
    return EXIT_OK


# ------------------------------------------------------------------- alloc


def _problem(run: Run, path):
    from .allocation import ProblemError, read_problem

    a = run.args
    overrides = dict(a.config_data.get("alloc", {}).get("params", {}))
    if getattr(a, "w", None) is not None:
        overrides["w"] = a.w
    if getattr(a, "exclusive_machines", False):
        overrides["exclusive_machines"] = True
    try:
        return read_problem(run.input(path), overrides)
    except ProblemError as exc:
        raise UsageError(str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _time_budget(a) -> Optional[float]:
    if a.time_budget is not None:
        return a.time_budget
    return a.config_data.get("alloc", {}).get("time_budget")


def solve_problem(run: Run, problem):
    from .allocation import SizingError, assign_detectors

    backend = run.args.config_data.get("alloc", {}).get("backend", "bnb")
    try:
        with run.timed("solve"):
            return assign_detectors(problem, _time_budget(run.args), backend)
    except SizingError as exc:
        raise UsageError(str(exc)) from None


def cmd_alloc_solve(run: Run) -> int:
    from .allocation import verify_assignment, write_assignment
    from .allocation.problem_io import schedule_csv

    problem = _problem(run, run.args.problem)
    a = solve_problem(run, problem)
    run.out.mkdir(parents=True, exist_ok=True)
    run.extra["status"] = a.status.value
    if not a.feasible or not a.chosen:
        print(f"status: {a.status.value}")
        return EXIT_INFEASIBLE
    write_assignment(a, run.out / "assignment.toml")
    (run.out / "schedule.csv").write_text(schedule_csv(problem, a))
    tags = verify_assignment(problem, a)
    run.extra["verified"] = not tags
    print(f"status: {a.status.value}  objective: {a.objective_value:.6g}  horizon: {a.horizon}")
    for v, d, b in a.chosen:
        print(f"  {v}: {d} @ {b:g} kbps")
    if tags:
        print("solver output failed verification: " + ", ".join(tags))
        return EXIT_ERROR
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    from .allocation import read_assignment, verify_assignment

    problem = _problem(run, run.args.problem)
    try:
        a = read_assignment(run.input(run.args.assignment))
    except (KeyError, ValueError, TypeError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"{run.args.assignment}: {exc}") from None
    with run.timed("verify"):
        tags = verify_assignment(problem, a)
    run.extra["violations"] = tags
    if tags:
        for t in tags:
            print(f"VIOLATION {t}")
        return EXIT_VIOLATION
    print("ok")
    return EXIT_OK


def cmd_size(run: Run) -> int:
    from .allocation import build_ilp, problem_size

    problem = _problem(run, run.args.problem)
    n_vars, n_cons = problem_size(problem)
    run.extra["size"] = {"variables": n_vars, "constraints": n_cons}
    if run.args.check:
        with run.timed("build"):
            inst = build_ilp(problem)
        run.extra["size"]["built"] = {"variables": inst.n_vars, "constraints": inst.n_constraints}
    print(f"{n_vars}:{n_cons}")
    return EXIT_OK


# ------------------------------------------------------------------ replay


def _scenario(run: Run, name):
    from .sim import ScenarioError, read_scenario
    from .sim.experiments import BUNDLED, bundled_path

    p = Path(name)
    if p.is_file():
        run.input(p)
        try:
            return read_scenario(p)
        except ScenarioError as exc:
            raise UsageError(str(exc)) from None
    key = name if name.endswith(".toml") else f"{name.removesuffix('.scenario')}.scenario.toml"
    if key not in BUNDLED:
        raise UsageError(f"{name}: no such file or bundled scenario ({', '.join(sorted(BUNDLED))})")
    run.extra["bundled_scenario"] = key
    text = bundled_path(key).read_text()
    run.inputs[f"bundled:{key}"] = hashlib.sha256(text.encode()).hexdigest()
    from .sim.scenario import scenario_from_dict

    return scenario_from_dict(tomllib.loads(text))


def cmd_replay(run: Run) -> int:
    from .allocation import write_assignment
    from .sim import ScenarioError, apply_overrides, run_experiment, write_report
    from .sim.experiments import allocation_scenario

    a = run.args
    sc = _scenario(run, a.scenario)
    overrides = dict(a.config_data.get("pipeline", {}))
    try:
        sc = apply_overrides(sc, overrides)
        sc = apply_overrides(sc, a.override or [])
        if a.grid_res is not None:
            sc = apply_overrides(sc, {"grid_res": a.grid_res})
        if a.seed is not None:
            sc = sc.replace(seed=a.seed)
    except (ScenarioError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    if a.alloc:
        problem = _problem(run, a.alloc)
        asg = solve_problem(run, problem)
        run.extra["allocation_status"] = asg.status.value
        if not asg.feasible or not asg.chosen:
            print(f"allocation status: {asg.status.value}; nothing to replay")
            return EXIT_INFEASIBLE
        sc = allocation_scenario(problem, asg, base=sc)
        run.out.mkdir(parents=True, exist_ok=True)
        write_assignment(asg, run.out / "assignment.toml")
    report = run_experiment(sc)
    run.timings.update(report.timings)
    run.out.mkdir(parents=True, exist_ok=True)
    # write_report emits the standard files; the manifest below replaces its own
    from .sim.run import config_hash

    write_report(report, sc, run.out)
    run.extra["config_hash"] = config_hash(sc)
    run.extra["scenario_seed"] = sc.seed
    s = report.summary()
    print(
        f"{s['scenario']}: {s['salient']} salient locations, {s['matched']} matched, {s['missed']} missed, "
        f"{s['false_locations']} false; mean probability {s['mean_probability']:.4f}, "
        f"mean error {s['mean_error_m'] if s['mean_error_m'] is not None else float('nan'):.3f} m"
    )
    return EXIT_OK


# ------------------------------------------------------------------- rerun


def cmd_rerun(run: Run) -> int:
    path = run.input(run.args.manifest)
    try:
        m = json.loads(path.read_text())
        argv, cwd, inputs = m["argv"], m["cwd"], m["inputs"]
    except (ValueError, KeyError) as exc:
        raise UsageError(f"{path}: not a run manifest ({exc})") from None
    out = str(Path(run.args.out).resolve())
    here = os.getcwd()
    os.chdir(cwd)
    try:
        for name, digest in inputs.items():
            if name.startswith("bundled:"):
                continue
            if not Path(name).is_file() or file_hash(name) != digest:
                raise UsageError(f"input {name} is missing or changed since the recorded run")
        return main(list(argv) + ["--out", out])
    finally:
        os.chdir(here)


# ------------------------------------------------------------------ parser


def _global_flags(parser, suppress: bool) -> None:
    # subcommand copies must not reset values given before the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(None), help="random seed (replay: overrides the scenario seed)")
    parser.add_argument("--out", default=d("skit-out"), help="output directory (default: skit-out)")
    parser.add_argument("--config", default=d(None), help="TOML config with [alloc], [eval] and [pipeline] tables")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = argparse.ArgumentParser(prog="skit", description="Detector scoring, allocation and saliency-map replay.")
    _global_flags(p, suppress=False)
    p.add_argument("--version", action="version", version=f"skit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="score a detection file against ground truth")
    e.add_argument("gt")
    e.add_argument("det")
    e.add_argument("--cutoff", type=float, default=None, help="fixed score cutoff for LRP instead of the optimum")
    e.add_argument("--degrade", default=None, help="comma-separated drop probabilities, e.g. 0,0.2,0.4")
    e.add_argument("--name", default="detector", help="detector id written to profile.toml")
    e.set_defaults(func=cmd_eval)

    def alloc_flags(q):
        q.add_argument("problem")
        q.add_argument("--time-budget", type=float, default=None, help="seconds")
        q.add_argument("--exclusive-machines", action="store_true")
        q.add_argument("--w", type=float, default=None, help="objective weight of accuracy vs link usage")

    al = sub.add_parser("alloc", parents=[common], help="detector allocation")
    asub = al.add_subparsers(dest="alloc_command", required=True)
    s = asub.add_parser("solve", parents=[common])
    alloc_flags(s)
    s.set_defaults(func=cmd_alloc_solve)
    for parent, cmd in ((asub, "verify"), (sub, "verify")):
        v = parent.add_parser(cmd, parents=[common], help="check an assignment against a problem")
        alloc_flags(v)
        v.add_argument("assignment")
        v.set_defaults(func=cmd_verify)
    for parent, cmd in ((asub, "size"), (sub, "size")):
        z = parent.add_parser(cmd, parents=[common], help="variable and constraint counts")
        alloc_flags(z)
        z.add_argument("--check", action="store_true", help="also build the program and record its size")
        z.set_defaults(func=cmd_size)

    r = sub.add_parser("replay", parents=[common], help="replay a scenario through detection and fusion")
    r.add_argument("scenario", help="scenario file or bundled name (exp1, exp2)")
    r.add_argument("--override", action="append", metavar="KEY=VALUE", help="pipeline, scenario or detector parameter")
    r.add_argument("--grid-res", type=float, default=None)
    r.add_argument("--alloc", metavar="PROBLEM", default=None, help="solve this allocation first and replay its detectors")
    r.add_argument("--time-budget", type=float, default=None)
    r.set_defaults(func=cmd_replay)

    rr = sub.add_parser("rerun", parents=[common], help="repeat a run recorded in a manifest")
    rr.add_argument("manifest")
    rr.set_defaults(func=cmd_rerun)
    return p


def main(argv: Optional[list] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    for attr in ("w", "exclusive_machines", "time_budget"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    run = Run(args, argv)
    try:
        args.config_data = load_config(args.config)
        if args.config:
            run.input(args.config)
        code = args.func(run)
    except UsageError as exc:
        print(f"skit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("unexpected failure", exc_info=True)
        print(f"skit: internal error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command != "rerun":
        run.write_manifest()
    return code


if __name__ == "__main__":
    sys.exit(main())
