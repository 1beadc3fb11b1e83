"""Command-line entry point: ``nonlocal-mm --config run.json --mode verify --out results/``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .config import SCHEMA_VERSION, ConfigError, SchemeConfig, load_config
from .kernel import DoublePhase, FractionalP, describe
from .orlicz import lemma_suite
from .reports import jsonable
from .scheme import (
    CSV_COLUMNS,
    StepNotConvergedError,
    Trajectory,
    continuity_check,
    energy_decay_check,
    refinement_cauchy_study,
    run_mm,
)
from .verify import checks

log = logging.getLogger("nonlocal_mm")

MODES = ("solve", "verify", "refine", "lemmas")


def _threads(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("NONLOCAL_MM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise SystemExit(f"NONLOCAL_MM_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise SystemExit("NONLOCAL_MM_THREADS must be at least 1")
        return n
    return None


def write_trajectory(traj: Trajectory, out: Path) -> None:
    with open(out / "trajectory.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rep in traj.reports:
            w.writerow([repr(v) if isinstance(v, float) else v for v in rep.as_row().values()])
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    for i, u in enumerate(traj.snapshots):
        with open(snaps / f"{i:03d}.json", "w", encoding="utf-8") as fh:
            json.dump([float(v) for v in u.values], fh)


def _traj_summary(traj: Trajectory) -> dict:
    return {
        "k": traj.k,
        "h": traj.h,
        "nodes": traj.grid.n_nodes,
        "interior_nodes": traj.grid.n_interior,
        "pairs": traj.pq.n_pairs,
        "startup": traj.startup,
        "steps": [{"step": i + 1, "iterations": s.iterations, "converged": s.converged,
                   "stop_reason": s.stop_reason, "grad_norm": s.grad_norm}
                  for i, s in enumerate(traj.steps)],
        "minimality_audits": list(traj.audits),
    }


def _has_weak_form(traj: Trajectory) -> bool:
    return isinstance(traj.sf, (FractionalP, DoublePhase)) and traj.nl.l >= 1


def verify_checks(traj: Trajectory, seed: int) -> list[dict]:
    """Every trajectory-level audit applicable to the run's structure function and nonlinearity."""
    lem = lemma_suite(traj.nl)
    c = lem["c_emp"]
    out = [
        {"check": "lemma_suite", "params": {"nonlinearity": lem["nonlinearity"]},
         "slack_or_residual": min(q["worst_slack"] for q in lem["inequalities"]),
         "pass": lem["pass"], "artifacts": lem},
        energy_decay_check(traj),
        continuity_check(traj, c),
        checks.first_variation_check(traj, seed=seed),
        checks.vi_audit(traj),
    ]
    if traj.sf.differentiable:
        out.append(checks.weak_vi_audit(traj))
    if _has_weak_form(traj):
        out.append(checks.weak_form_report(traj))
    out.append(checks.discrete_ibp_ladder(traj))
    out.append(checks.initial_condition_check(traj, c_emp=c))
    out.append(checks.coercivity_check(traj))
    out.append(checks.mollifier_suite(seed=seed))
    return out


def refine_checks(cfg: SchemeConfig, seed: int) -> list[dict]:
    out = [refinement_cauchy_study(cfg, cfg.study.k_list)]
    probe = cfg.with_(k=cfg.study.ladder_k[0], **{"grid.nodes": cfg.study.ladder_nodes[0]})
    runs = [run_mm(probe, audit=False, seed=seed)]
    if _has_weak_form(runs[0]):
        for k, n in zip(cfg.study.ladder_k[1:], cfg.study.ladder_nodes[1:]):
            runs.append(run_mm(cfg.with_(k=k, **{"grid.nodes": n}), audit=False, seed=seed))
        out.append(checks.weak_form_ladder(runs))
    return out


def run(cfg: SchemeConfig, mode: str, out: Path, seed: int = 0) -> int:
    """Execute one mode and write its artifacts. Returns the process exit status."""
    out.mkdir(parents=True, exist_ok=True)
    report = {"schema_version": SCHEMA_VERSION, "mode": mode, "seed": seed,
              "config": cfg.model_dump(), "checks": []}
    status = 0
    try:
        if mode == "lemmas":
            lem = lemma_suite(cfg.nl.build())
            report["checks"].append({"check": "lemma_suite", "params": {"nonlinearity": lem["nonlinearity"]},
                                     "slack_or_residual": min(q["worst_slack"] for q in lem["inequalities"]),
                                     "pass": lem["pass"], "artifacts": lem})
        elif mode == "refine":
            report["checks"].extend(refine_checks(cfg, seed))
        else:
            traj = run_mm(cfg, strict=True, audit=True, seed=seed)
            write_trajectory(traj, out)
            report["structure_function"] = describe(traj.sf)
            report["nonlinearity"] = traj.nl.describe()
            report["trajectory"] = _traj_summary(traj)
            if mode == "solve":
                report["checks"].append(energy_decay_check(traj))
            else:
                report["checks"].extend(verify_checks(traj, seed))
    except StepNotConvergedError as exc:
        report["error"] = {"type": "divergence", "message": str(exc)}
        status = 2
    for chk in report["checks"]:
        log.info("%-28s %s", chk["check"], "pass" if chk["pass"] else "FAIL")
    if any(not chk["pass"] for chk in report["checks"]):
        status = status or 1
    report["pass"] = status == 0
    with open(out / "run_report.json", "w", encoding="utf-8") as fh:
        json.dump(jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonlocal-mm", description=__doc__)
    ap.add_argument("--config", required=True, type=Path, help="JSON run config")
    ap.add_argument("--mode", choices=MODES, default="solve")
    ap.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized audits")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads for pair reductions (default: NONLOCAL_MM_THREADS or config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    threads = _threads(args.threads)
    if threads is not None:
        if threads < 1:
            print("--threads must be at least 1", file=sys.stderr)
            return 2
        cfg = cfg.with_(threads=threads)
    return run(cfg, args.mode, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
