"""Train one experiment, generate from it and write its artifacts."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .engine import forward
from .noise import lossy_forward_fn
from .quadrature import Pdf, kl_divergence
from .targets import Target, build_target, kl_window
from .trainer import TrainResult, generate, train

SAMPLE_STREAM = 1  # second rng stream of the config seed feeds the homodyne sampler


@dataclass
class CaseRun:
    config: ExperimentConfig
    target: Target
    result: TrainResult
    pdf: Pdf
    samples: np.ndarray
    kl: float
    window: tuple
    per_step_probs: tuple
    transmissivity: float | None = None
    placement: str | None = None


def windowed_kl(gen: Pdf, target: Pdf, window) -> float:
    return kl_divergence(gen.restrict(*window), target.restrict(*window))


def run_experiment(
    cfg: ExperimentConfig, *, seed=None, post_select=None, transmissivity=None, placement="visible-only", callback=None
) -> CaseRun:
    qbm = cfg.qbm if post_select is None else replace(cfg.qbm, post_select_outcome=post_select)
    tcfg = cfg.train if seed is None else replace(cfg.train, seed=seed)
    target = build_target(cfg.target, cfg.grid, qbm.cutoff)
    fwd = forward if transmissivity is None else lossy_forward_fn(transmissivity, placement)
    result = train(target.rho, qbm, tcfg, forward_fn=fwd, fidelity_fn=target.fidelity_fn, callback=callback)
    rng = np.random.default_rng([tcfg.seed, SAMPLE_STREAM])
    gen = generate(result, qbm, cfg.grid, cfg.n_samples, rng, forward_fn=fwd)
    window = kl_window(target, cfg.grid)
    kl = windowed_kl(gen.pdf, target.pdf, window)
    result.final_kl = kl
    probs = fwd(result.best_params, qbm).per_step_probs
    return CaseRun(cfg, target, result, gen.pdf, gen.samples, kl, window, probs,
                   transmissivity, placement if transmissivity is not None else None)


def threshold_misses(run: CaseRun) -> list:
    """Human-readable list of configured thresholds the run failed."""
    t = run.config.thresholds
    misses = []
    if "fidelity" in t and not run.result.final_fidelity >= t["fidelity"]:
        misses.append(f"fidelity {run.result.final_fidelity:.4f} < {t['fidelity']}")
    if "kl" in t and not run.kl <= t["kl"]:
        misses.append(f"kl {run.kl:.4f} > {t['kl']}")
    if "success_prob" in t and not run.result.final_success_prob >= t["success_prob"]:
        misses.append(f"success_prob {run.result.final_success_prob:.4f} < {t['success_prob']}")
    return misses


def report_dict(run: CaseRun) -> dict:
    d = run.result.to_dict()
    d.update(
        name=run.config.name,
        kl=float(run.kl),
        kl_window=[float(x) for x in run.window],
        per_step_probs=[float(p) for p in run.per_step_probs],
        target=run.target.info,
        n_samples=run.config.n_samples,
        thresholds=run.config.thresholds,
        threshold_misses=threshold_misses(run),
    )
    if run.transmissivity is not None:
        d.update(transmissivity=run.transmissivity, placement=run.placement)
    return d


def pdf_csv(run: CaseRun) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q", "target", "generated"])
    for row in zip(run.config.grid.q, run.target.pdf.values, run.pdf.values):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def read_pdf_csv(text):
    """Inverse of :func:`pdf_csv`: ``(q, target, generated)`` arrays."""
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != ["q", "target", "generated"]:
        raise ValueError(f"unexpected header {rows[0]}")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r])
    return data[:, 0], data[:, 1], data[:, 2]


def samples_csv(samples) -> str:
    return "".join(f"{float(x)!r}\n" for x in samples)


def read_samples_csv(text) -> np.ndarray:
    return np.array([float(line) for line in text.splitlines() if line.strip()])


def write_outputs(run: CaseRun, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report_dict(run), indent=2, sort_keys=True) + "\n")
    (out / "pdf.csv").write_text(pdf_csv(run))
    (out / "samples.csv").write_text(samples_csv(run.samples))
    params = {"steps": run.result.best_params.to_list(), "qbm": run.result.qbm_config}
    (out / "params.json").write_text(json.dumps(params, indent=2, sort_keys=True) + "\n")
    return out
