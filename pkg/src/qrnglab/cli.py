"""Command-line surface: simulate frames, compute distributions and
entropy curves, fit noise, run correlation and health-test analyses.

Exit codes: 0 success, 2 configuration error, 3 numeric or convergence
error, 4 I/O error. All text outputs embed the configuration digest so
artifacts are self-describing; every command is deterministic given
(config, seed).
"""

from __future__ import annotations

import functools
import hashlib
import json
import sys

import click
import numpy as np

from . import estimators, health, model, sampler
from .config import RunConfig, default_config, load_config, parse_grid
from .entropy import entropy_curve, min_entropy_unconditional
from .errors import ConfigError, ConvergenceError, FitError
from .types import NO_NOISE, NoiseParams, SourceParams


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except (ConvergenceError, FitError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)

    return wrapper


def _load(config_path) -> RunConfig:
    return load_config(config_path) if config_path else default_config()


def _resolve_grid(grid_option, cfg: RunConfig, what: str):
    if grid_option:
        return parse_grid(grid_option, "--grid")
    if cfg.grid:
        return list(cfg.grid)
    raise ConfigError(f"{what} needs --grid or a grid entry in the config")


def _write_csv(path, digest: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_digest: {digest}\n")
        fh.write(f"# columns: {','.join(columns)}\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")


def _write_json(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


@click.group()
def main():
    """Entropy model and simulator for a CMOS-sensor QRNG chip."""


@main.command("pmf")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--mu-e", type=float, required=True, help="Mean photo-electron count.")
@click.option("--no-noise", is_flag=True, help="Disable all classical noise.")
@click.option("--out", type=click.Path(), required=True, help="Output CSV path.")
@_handle_errors
def cmd_pmf(config_path, mu_e, no_noise, out):
    """Exact ADC-code distribution as (code, probability) CSV."""
    cfg = _load(config_path)
    noise = NO_NOISE if no_noise else cfg.model.pixels[0].noise
    pmf = model.adc_output_pmf(SourceParams(mu_e), noise, cfg.chip, cfg.quad.tail_eps)
    rows = [
        (int(z), float(p))
        for z, p in zip(pmf.support, pmf.probs)
        if p > 0.0
    ]
    _write_csv(out, cfg.digest(), ["code", "probability"], rows)


@main.command("entropy-curve")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--grid", default=None, help="start:stop:points or comma list.")
@click.option("--out", type=click.Path(), required=True, help="Curve CSV path.")
@click.option("--summary", "summary_path", type=click.Path(), default=None,
              help="Summary JSON path (default: stdout).")
@_handle_errors
def cmd_entropy_curve(config_path, grid, out, summary_path):
    """Conditional min-entropy per bit across source strengths."""
    cfg = _load(config_path)
    mu_grid = _resolve_grid(grid, cfg, "entropy-curve")
    noise = cfg.model.pixels[0].noise
    curve = entropy_curve(mu_grid, noise, cfg.chip, cfg.quad)
    rows = [
        (float(mu), float(res.p_guess), float(res.h_min_per_bit))
        for mu, res in curve
    ]
    _write_csv(out, cfg.digest(), ["mu_e", "p_guess", "h_min_per_bit"], rows)
    h_values = [res.h_min_per_bit for _, res in curve]
    i_min = int(np.argmin(h_values))
    _write_json(summary_path, {
        "config_digest": cfg.digest(),
        "grid_min_mu_e": mu_grid[0],
        "grid_max_mu_e": mu_grid[-1],
        "min_h_per_bit": h_values[i_min],
        "min_at_mu_e": mu_grid[i_min],
    })


@main.command("simulate")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--frames", type=int, required=True, help="Number of frames.")
@click.option("--seed", type=int, default=None, help="Override config seed.")
@click.option("--out-frames", type=click.Path(), default=None,
              help="Binary frame file path.")
@click.option("--out-bits", type=click.Path(), default=None,
              help="Packed bitstream path.")
@_handle_errors
def cmd_simulate(config_path, frames, seed, out_frames, out_bits):
    """Draw synthetic acquisition frames and/or the packed bitstream."""
    cfg = _load(config_path)
    if not out_frames and not out_bits:
        raise ConfigError("simulate needs --out-frames and/or --out-bits")
    batch = sampler.sample_frames(cfg.model, frames, seed if seed is not None else cfg.seed)
    if out_frames:
        sampler.write_frames(out_frames, batch, cfg.chip)
    if out_bits:
        with open(out_bits, "wb") as fh:
            fh.write(sampler.export_bitstream(batch, cfg.chip))


@main.command("correlate")
@click.option("--frames-file", type=click.Path(exists=True), required=True)
@click.option("--max-lag", type=int, default=100, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Report JSON path.")
@_handle_errors
def cmd_correlate(frames_file, max_lag, out):
    """Pairwise Pearson summary and per-pixel autocorrelation report."""
    codes, _ = sampler.read_frames(frames_file)
    batch = sampler.FrameBatch(codes=codes, seed=0, model_digest="")
    report = estimators.correlation_report(batch, max_lag)
    off_diag = report.pairwise[~np.eye(batch.n_pixels, dtype=bool)]
    finite = off_diag[np.isfinite(off_diag)]
    _write_json(out, {
        "input_digest": _file_digest(frames_file),
        "n_frames": batch.n_frames,
        "n_pixels": batch.n_pixels,
        "pairwise": {
            "mean": float(finite.mean()) if finite.size else None,
            "std": float(finite.std()) if finite.size else None,
            "max_abs": float(np.abs(finite).max()) if finite.size else None,
            "n_pairs": int(finite.size // 2),
        },
        "autocorr": {
            "max_lag": max_lag,
            "series": [[float(v) for v in row] for row in report.autocorr],
        },
        "confidence_bands": {
            "one_sigma": report.sigma_expected,
            "three_sigma": 3.0 * report.sigma_expected,
        },
        "dead_pixels": [int(i) for i in report.dead_pixels],
    })


@main.command("fit-noise")
@click.option("--histogram-file", type=click.Path(exists=True), default=None,
              help="CSV of code,count rows.")
@click.option("--frames-file", type=click.Path(exists=True), default=None,
              help="Binary frame file of a dark acquisition.")
@click.option("--pixel", type=int, default=0, show_default=True,
              help="Pixel column when reading frames.")
@click.option("--init", "init_text", default=None,
              help="Starting point as mu_r,sigma_r,mu_dark.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None, help="Fit JSON path.")
@_handle_errors
def cmd_fit_noise(histogram_file, frames_file, pixel, init_text, config_path, out):
    """Maximum-likelihood noise parameters from a dark histogram."""
    cfg = _load(config_path)
    if (histogram_file is None) == (frames_file is None):
        raise ConfigError("fit-noise needs exactly one of --histogram-file/--frames-file")
    if histogram_file:
        counts = np.zeros(cfg.chip.z_max + 1)
        with open(histogram_file, "r", encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                if len(parts) != 2:
                    raise ConfigError(f"{histogram_file}:{ln}: expected code,count")
                counts[int(parts[0])] = float(parts[1])
        source_digest = _file_digest(histogram_file)
    else:
        codes, _ = sampler.read_frames(frames_file)
        if not 0 <= pixel < codes.shape[1]:
            raise ConfigError(f"--pixel {pixel} out of range for {codes.shape[1]} pixels")
        counts = np.bincount(codes[:, pixel], minlength=cfg.chip.z_max + 1).astype(float)
        source_digest = _file_digest(frames_file)
    init = None
    if init_text:
        parts = init_text.split(",")
        if len(parts) != 3:
            raise ConfigError("--init expects mu_r,sigma_r,mu_dark")
        init = NoiseParams(float(parts[0]), float(parts[1]), float(parts[2]))
    fit = estimators.fit_noise_model(counts, cfg.chip, init=init)
    se = fit.stderr
    _write_json(out, {
        "input_digest": source_digest,
        "config_digest": cfg.digest(),
        "mu_r": fit.params.mu_r,
        "sigma_r": fit.params.sigma_r,
        "mu_dark": fit.params.mu_dark,
        "gain_k": fit.gain_k,
        "stderr": {"mu_r": float(se[0]), "sigma_r": float(se[1]),
                   "mu_dark": float(se[2])},
        "chi2": fit.residual,
        "chi2_dof": fit.residual_dof,
    })


@main.command("health-sweep")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--grid", default=None, help="start:stop:points or comma list.")
@click.option("--out", type=click.Path(), required=True, help="Sweep CSV path.")
@click.option("--verdict", "verdict_path", type=click.Path(), default=None,
              help="Guarantee verdict JSON path (default: stdout).")
@_handle_errors
def cmd_health_sweep(config_path, grid, out, verdict_path):
    """Failure probability and average entropy across source strengths,
    plus the entropy-guarantee verdict."""
    cfg = _load(config_path)
    mu_grid = _resolve_grid(grid, cfg, "health-sweep")
    sweep = health.health_sweep(mu_grid, cfg.model, cfg.health, cfg.quad)
    rows = [
        (float(pt.mu_e), float(pt.p_fail), float(pt.avg_h_min_per_bit))
        for pt in sweep
    ]
    _write_csv(out, cfg.digest(), ["mu_e", "p_fail", "avg_h_min_per_bit"], rows)
    holds, witnesses = health.verify_guarantee(sweep, cfg.health)
    _write_json(verdict_path, {
        "config_digest": cfg.digest(),
        "guarantee_holds": holds,
        "h_min_floor_per_symbol": cfg.health.h_min_floor,
        "epsilon": cfg.health.epsilon,
        "witnesses": [
            {"mu_e": w.mu_e, "p_fail": w.p_fail,
             "avg_h_min_per_bit": w.avg_h_min_per_bit}
            for w in witnesses
        ],
    })


@main.command("estimate")
@click.option("--bits-file", type=click.Path(exists=True), required=True)
@click.option("--symbol-bits", type=click.IntRange(1, 2), default=2, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Report JSON path.")
@_handle_errors
def cmd_estimate(bits_file, symbol_bits, out):
    """Most-common-value entropy estimate of a packed bitstream."""
    with open(bits_file, "rb") as fh:
        bits = fh.read()
    result = estimators.mcv_entropy(bits, symbol_bits)
    _write_json(out, {
        "input_digest": _file_digest(bits_file),
        "p_hat": result.p_hat,
        "p_upper": result.p_upper,
        "h_per_bit": result.h_per_bit,
        "n_symbols": result.n_symbols,
        "symbol_bits": result.symbol_bits,
    })


if __name__ == "__main__":
    main()
