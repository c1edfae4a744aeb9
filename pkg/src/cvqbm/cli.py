"""Command-line entry point: ``cvqbm run|sweep|list``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, list_bundled, load_config
from .errors import ConfigError, CvqbmError, InvalidArgument
from .noise import PLACEMENTS, NoiseSweepConfig, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_THRESHOLD = 4


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override train.seed")
    common.add_argument("--out-dir", help="output directory (default: the config's outputs entry)")
    common.add_argument("--post-select", type=int, choices=(0, 1), help="ancilla photon count to keep")
    common.add_argument("--assert", dest="check", action="store_true", help="exit 4 when a configured threshold is missed")

    p = argparse.ArgumentParser(prog="cvqbm", description="Continuous-variable quantum Boltzmann machine experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="train one experiment and write its artifacts")
    run.add_argument("config", help="config file or bundled case name")
    sw = sub.add_parser("sweep", parents=[common], help="train under photon loss over a list of transmissivities")
    sw.add_argument("config", help="config file or bundled case name")
    sw.add_argument("--t-values", type=float, nargs="+", help="transmissivities (default: the config's noise.T_values)")
    sw.add_argument("--repeats", type=int, help="seeds per transmissivity")
    sw.add_argument("--placement", choices=PLACEMENTS, help="where loss acts")
    sw.add_argument("--workers", type=int, default=1, help="parallel training processes")
    sub.add_parser("list", help="print the bundled case names")
    return p


def _fail(code, kind, message) -> int:
    print(json.dumps({"status": "error", "exit_code": code, "reason": kind, "message": message}), file=sys.stderr)
    return code


def _configure(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, train=replace(cfg.train, seed=args.seed))
    if args.post_select is not None:
        cfg = replace(cfg, qbm=replace(cfg.qbm, post_select_outcome=args.post_select))
    return cfg


def _cmd_run(args) -> int:
    from .runner import run_experiment, threshold_misses, write_outputs

    cfg = _configure(args)
    run = run_experiment(cfg)
    out = write_outputs(run, args.out_dir or cfg.outputs)
    r = run.result
    print(f"{cfg.name}: fidelity={r.final_fidelity:.4f} kl={run.kl:.4f} success_prob={r.final_success_prob:.4g} -> {out}")
    misses = threshold_misses(run)
    if args.check and misses:
        return _fail(EXIT_THRESHOLD, "threshold-miss", "; ".join(misses))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _configure(args)
    t_values = args.t_values if args.t_values else cfg.noise.T_values
    sc = NoiseSweepConfig(
        base=cfg,
        T_values=t_values,
        repeats=args.repeats if args.repeats is not None else cfg.noise.repeats,
        placement=args.placement or cfg.noise.placement,
        workers=args.workers,
    )

    def show(row):
        print(
            f"T={row.T:.3f} fidelity={row.mean_fidelity:.4f}±{row.std_fidelity:.4f} "
            f"kl={row.mean_kl:.4f}±{row.std_kl:.4f} failures={row.failures}/{row.runs}"
        )

    result = sweep(sc, progress=show)
    out = Path(args.out_dir or cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(result.runs_csv())
    (out / "sweep_summary.csv").write_text(result.summary_csv())
    if all(row.failures == row.runs for row in result.rows):
        return _fail(EXIT_NUMERICAL, "all-runs-failed", "every sweep run failed; see sweep.csv")
    if args.check and "fidelity" in cfg.thresholds:
        first = result.rows[0]
        if first.T == 1.0 and not first.mean_fidelity >= cfg.thresholds["fidelity"]:
            return _fail(EXIT_THRESHOLD, "threshold-miss", f"mean fidelity at T=1 is {first.mean_fidelity:.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name in list_bundled():
            print(name)
        return EXIT_OK
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_sweep(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config-error", str(exc))
    except InvalidArgument as exc:
        # bad parameter combinations that only surface once the target is built
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
    except CvqbmError as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    except FloatingPointError as exc:
        return _fail(EXIT_NUMERICAL, "floating-point", str(exc))


if __name__ == "__main__":
    sys.exit(main())
