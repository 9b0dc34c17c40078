"""Command-line entry point: ``phlab <command> [options]``.

Exit codes: 0 pass, 1 assertion failure, 2 configuration error, 3 runtime or
solver error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..dynamics import SolverError
from ..norms import NormParams, RadiusTooLargeError, norms_weight_route
from ..radius import RadiusCollapseError, integrated_relation_error
from .config import ConfigError, load_config
from .io import CheckpointError, read_checkpoint, read_records, write_checkpoint, write_records

log = logging.getLogger("phlab")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML scenario file (defaults apply when omitted)")
    common.add_argument("--out", type=Path, help="output directory (default: output.directory)")
    common.add_argument("--seed", type=int, help="seed for random perturbations (overrides run.seed)")
    common.add_argument("--override", action="append", default=[], metavar="BLOCK.KEY=VALUE",
                        help="override one config value; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="phlab", description="Hartmann boundary-layer stability lab")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="simulate and write records plus a final checkpoint")
    sub.add_parser("decay", parents=[common], help="nonlinear decay and Lyapunov check")
    sub.add_parser("uniqueness", parents=[common], help="contraction of two nearby solutions")
    sub.add_parser("compare", parents=[common], help="damped versus undamped decay rates")
    sub.add_parser("converge", parents=[common], help="manufactured-solution convergence orders")
    norms = sub.add_parser("norms", parents=[common], help="analytic norms of a checkpoint")
    norms.add_argument("checkpoint", type=Path)
    radius = sub.add_parser("radius", parents=[common], help="check the radius bookkeeping of a record CSV")
    radius.add_argument("csv", type=Path)
    return p


def _config(args):
    overrides = list(args.override)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError(f"--seed: must be an unsigned 64-bit integer, got {args.seed}")
        overrides.append(f"run.seed={args.seed}")
    return load_config(args.config, overrides)


def _write_report(out: Path, name: str, payload: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}_report.json"

    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        return x

    path.write_text(json.dumps(clean(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _cmd_run(cfg, out: Path) -> int:
    from .experiments import simulate

    res = simulate(cfg)
    for fmt in cfg.output.formats:
        write_records(res.records, out / f"run.{fmt}", fmt)
    write_checkpoint(res.final_state, out / "final.chk")
    last = res.records[-1]
    print(f"t={last.t:.6g} normX={last.normX:.6e} tau={last.tau:.6f} records={len(res.records)}")
    return EXIT_PASS


def _cmd_experiment(name: str, cfg, out: Path) -> int:
    from . import experiments as ex

    runner = {"decay": ex.run_decay_experiment, "uniqueness": ex.run_uniqueness_experiment,
              "compare": ex.run_comparison}.get(name)
    rep = ex.run_convergence_study(cfg) if runner is None else runner(cfg, out)
    _write_report(out, name, rep.to_dict())
    print(rep.summary())
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _cmd_norms(cfg, path: Path) -> int:
    state = read_checkpoint(path)
    p = NormParams(r=state.params.r, tau=state.tau, alpha=state.params.alpha, band=state.grid.nx // 3)
    rep = norms_weight_route(state.grid, state.g, p)
    print(json.dumps({"t": state.t, "tau": state.tau, **rep.as_dict()}, indent=2))
    return EXIT_PASS


def _cmd_radius(cfg, path: Path) -> int:
    recs = read_records(path)
    if len(recs) < 2:
        raise ValueError(f"{path}: need at least 2 records")
    t = np.array([r.t for r in recs])
    tau = np.array([r.tau for r in recs])
    err = integrated_relation_error(t, tau, [r.normX for r in recs], [r.normZ for r in recs], cfg.model.C_ode)
    above = bool(np.all(tau > 0.5 * tau[0]))
    ok = above and err <= 1e-3
    print(f"min tau = {tau.min():.6f} (tau0 = {tau[0]:.6f}); tau > tau0/2: {above}")
    print(f"integrated relation error = {err:.3e} (limit 1e-3)")
    print("PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_FAIL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out if args.out is not None else Path(cfg.output.directory)
    try:
        if args.command == "run":
            return _cmd_run(cfg, out)
        if args.command == "norms":
            return _cmd_norms(cfg, args.checkpoint)
        if args.command == "radius":
            return _cmd_radius(cfg, args.csv)
        return _cmd_experiment(args.command, cfg, out)
    except (SolverError, RadiusCollapseError, RadiusTooLargeError, CheckpointError, OSError, ValueError,
            FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
