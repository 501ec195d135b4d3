"""Threshold-based online health test: per-frame out-of-range counting,
its exact failure probability, and entropy-guarantee auditing.

A frame fails when more than n_minus_max codes fall below t_minus or more
than n_plus_max rise above t_plus; failed frames are discarded by the
caller. Because the code distribution of every pixel is known exactly,
the failure probability needs no simulation: it is a dynamic program over
the per-pixel below/inside/above trinomials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import min_entropy_conditional
from .model import adc_output_pmf
from .types import ArrayModel, EntropyResult, QuadratureSpec


@dataclass(frozen=True)
class HealthConfig:
    """Thresholds and counts of the online test, plus the audited bound:
    h_min_floor is in bits per retained symbol (2 bits), epsilon the
    tolerated probability of a passing frame having entropy at or below
    the floor."""

    t_minus: int
    t_plus: int
    n_minus_max: int
    n_plus_max: int
    h_min_floor: float = 1.96
    epsilon: float = 1e-6

    def __post_init__(self):
        if not 0 <= self.t_minus < self.t_plus:
            raise ValueError(
                f"need 0 <= t_minus < t_plus, got ({self.t_minus}, {self.t_plus})"
            )
        if self.n_minus_max < 0 or self.n_plus_max < 0:
            raise ValueError("count bounds must be non-negative")


@dataclass(frozen=True)
class FrameVerdict:
    n_minus: int
    n_plus: int
    failed: bool


@dataclass(frozen=True)
class HealthSweepPoint:
    mu_e: float
    p_fail: float
    avg_h_min_per_bit: float


def judge_frame(frame: np.ndarray, cfg: HealthConfig) -> FrameVerdict:
    """Out-of-range counts and pass/fail verdict for one frame of codes."""
    frame = np.asarray(frame)
    n_minus = int((frame < cfg.t_minus).sum())
    n_plus = int((frame > cfg.t_plus).sum())
    failed = n_minus > cfg.n_minus_max or n_plus > cfg.n_plus_max
    return FrameVerdict(n_minus=n_minus, n_plus=n_plus, failed=failed)


def judge_batch(codes: np.ndarray, cfg: HealthConfig) -> np.ndarray:
    """Boolean fail flags for a (t, p) block of frames."""
    n_minus = (codes < cfg.t_minus).sum(axis=1)
    n_plus = (codes > cfg.t_plus).sum(axis=1)
    return (n_minus > cfg.n_minus_max) | (n_plus > cfg.n_plus_max)


def out_of_range_probs(
    model: ArrayModel, cfg: HealthConfig, tail_eps: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel probabilities (q_minus, q_plus) of landing below t_minus
    or above t_plus, from the exact code pmf."""
    q_minus = np.empty(model.n_pixels)
    q_plus = np.empty(model.n_pixels)
    cache: dict = {}
    for i, pixel in enumerate(model.pixels):
        key = (pixel.source.mu_e, pixel.noise)
        if key not in cache:
            cache[key] = adc_output_pmf(pixel.source, pixel.noise, model.chip, tail_eps)
        pmf = cache[key]
        q_minus[i] = pmf.mass_below(cfg.t_minus)
        q_plus[i] = pmf.mass_above(cfg.t_plus)
    return q_minus, q_plus


def failure_probability(
    model: ArrayModel, cfg: HealthConfig, tail_eps: float = 1e-12
) -> float:
    """Exact probability that a frame from the model fails the test.

    Dynamic program over pixels: the state is the joint count
    (min(n_minus, N-+1), min(n_plus, N++1)), i.e. counts saturate one past
    their bound, which keeps the table at (N-+2) x (N++2) regardless of
    array size. Heterogeneous pixels are supported.
    """
    q_minus, q_plus = out_of_range_probs(model, cfg, tail_eps)
    return failure_probability_from_qs(q_minus, q_plus, cfg)


def failure_probability_from_qs(
    q_minus: np.ndarray, q_plus: np.ndarray, cfg: HealthConfig
) -> float:
    """The same dynamic program, starting from per-pixel probabilities."""
    nm, np_ = cfg.n_minus_max, cfg.n_plus_max
    state = np.zeros((nm + 2, np_ + 2))
    state[0, 0] = 1.0
    for qm, qp in zip(q_minus, q_plus):
        qin = max(1.0 - qm - qp, 0.0)
        nxt = qin * state
        shifted_m = np.zeros_like(state)
        shifted_m[1:, :] = state[:-1, :]
        shifted_m[-1, :] += state[-1, :]  # saturated counts stay saturated
        nxt += qm * shifted_m
        shifted_p = np.zeros_like(state)
        shifted_p[:, 1:] = state[:, :-1]
        shifted_p[:, -1] += state[:, -1]
        nxt += qp * shifted_p
        state = nxt
    p_pass = float(state[: nm + 1, : np_ + 1].sum())
    return min(max(1.0 - p_pass, 0.0), 1.0)


def health_sweep(
    mu_e_grid,
    base_model: ArrayModel,
    cfg: HealthConfig,
    quad: QuadratureSpec | None = None,
    accepted_only: bool = False,
) -> list[HealthSweepPoint]:
    """Failure probability and array-average conditional min-entropy per
    bit, with every pixel's source strength set to each grid value.

    The reported entropy is unconditional on frame acceptance by default;
    accepted_only=True conditions each pixel's symbol distribution on its
    own code passing the thresholds (sensitivity variant).
    """
    grid = [float(m) for m in mu_e_grid]
    if not grid:
        raise ValueError("mu_e grid must be non-empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("mu_e grid must be ascending")
    quad = quad or QuadratureSpec()
    accepted_range = (cfg.t_minus, cfg.t_plus) if accepted_only else None

    points = []
    for mu_e in grid:
        model = base_model.with_mu_e(mu_e)
        p_fail = failure_probability(model, cfg, quad.tail_eps)
        cache: dict = {}
        per_bit = []
        for pixel in model.pixels:
            key = (pixel.source.mu_e, pixel.noise)
            if key not in cache:
                cache[key] = min_entropy_conditional(
                    pixel.source, pixel.noise, model.chip, quad,
                    accepted_range=accepted_range,
                )
            per_bit.append(cache[key].h_min_per_bit)
        points.append(
            HealthSweepPoint(
                mu_e=mu_e,
                p_fail=p_fail,
                avg_h_min_per_bit=float(np.mean(per_bit)),
            )
        )
    return points


def verify_guarantee(
    sweep: list[HealthSweepPoint], cfg: HealthConfig
) -> tuple[bool, list[HealthSweepPoint]]:
    """Audit the entropy guarantee over a sweep.

    At every point where the average entropy is at or below the floor
    (cfg.h_min_floor, bits per 2-bit symbol), a frame must pass the health
    test with probability at most epsilon. Returns (holds, witnesses);
    an empty sweep holds vacuously.
    """
    witnesses = [
        pt
        for pt in sweep
        if pt.avg_h_min_per_bit * 2.0 <= cfg.h_min_floor
        and (1.0 - pt.p_fail) > cfg.epsilon
    ]
    return (len(witnesses) == 0, witnesses)
