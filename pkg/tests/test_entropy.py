"""Min-entropy computations: unconditional, conditional on the classical
noise, and the curve over source strengths."""

import numpy as np
import pytest
from scipy import stats

import qrnglab.entropy as entropy_mod
from qrnglab import (
    ConvergenceError,
    NO_NOISE,
    NoiseParams,
    Pmf,
    QuadratureSpec,
    REFERENCE_PIXELS,
    SourceParams,
    entropy_curve,
    min_entropy_conditional,
    min_entropy_unconditional,
    symbol_pmf,
)


# ---------------------------------------------------------------------------
# unconditional
# ---------------------------------------------------------------------------


def test_unconditional_uniform_is_maximal():
    res = min_entropy_unconditional(Pmf(np.arange(4), np.full(4, 0.25)))
    assert res.h_min_per_bit == pytest.approx(1.0, abs=1e-12)


def test_unconditional_point_mass_is_zero():
    res = min_entropy_unconditional(Pmf(np.arange(4), np.array([0, 0, 1.0, 0])))
    assert res.h_min_per_bit == 0.0
    assert res.p_guess == 1.0


def test_unconditional_full_model(chip, pixel1_pmf_625):
    res = min_entropy_unconditional(symbol_pmf(pixel1_pmf_625, chip))
    assert res.h_min_per_bit == pytest.approx(0.999, abs=0.001)


def test_entropy_result_consistency(chip, pixel1_pmf_625):
    res = min_entropy_unconditional(symbol_pmf(pixel1_pmf_625, chip))
    assert res.h_min_total == pytest.approx(-np.log2(res.p_guess), abs=1e-12)
    assert 0.0 <= res.h_min_per_bit <= 1.0


# ---------------------------------------------------------------------------
# conditional
# ---------------------------------------------------------------------------


def test_conditional_noiseless_reproduces_pileup_entropy(chip):
    res = min_entropy_conditional(SourceParams(625.0), NO_NOISE, chip)
    assert res.h_min_per_bit == pytest.approx(0.982, abs=0.002)


@pytest.mark.parametrize("mu_e", [500.0, 625.0, 750.0])
def test_conditional_operating_range(chip, pixel1, mu_e):
    res = min_entropy_conditional(SourceParams(mu_e), pixel1, chip)
    assert res.h_min_per_bit > 0.98


def test_conditional_no_signal_is_deterministic(chip):
    noise = NoiseParams(mu_r=0.0, sigma_r=0.05, mu_dark=0.0)
    res = min_entropy_conditional(SourceParams(0.0), noise, chip)
    assert res.p_guess == 1.0
    assert res.h_min_total == 0.0


def test_conditional_matches_monte_carlo_oracle(chip, pixel1):
    # independent estimate: sample the classical realization, average the
    # brute-force conditional maximum
    rng = np.random.default_rng(31337)
    n_samples = 10_000
    ns = np.arange(380, 900)
    w = stats.poisson.pmf(ns, 625.0)
    kn = chip.gain_k * ns
    e_samples = (
        pixel1.mu_r
        + chip.gain_k * rng.poisson(pixel1.mu_dark, n_samples)
        + rng.normal(0.0, pixel1.sigma_r, n_samples)
    )
    total = 0.0
    for e in e_samples:
        codes = np.clip(np.floor(kn + e).astype(np.int64), 0, chip.z_max)
        sums = np.bincount((codes >> 2) & 3, weights=w, minlength=4)
        total += sums.max()
    mc = total / n_samples
    se = np.sqrt(mc * (1 - mc) / n_samples)
    res = min_entropy_conditional(SourceParams(625.0), pixel1, chip)
    assert abs(res.p_guess - mc) <= 4.0 * se


@pytest.mark.parametrize(
    "mu_e,noise",
    [
        (625.0, REFERENCE_PIXELS[1]),
        (150.0, REFERENCE_PIXELS[1]),
        (625.0, REFERENCE_PIXELS[4]),
        (50.0, NoiseParams(mu_r=2.0, sigma_r=0.5, mu_dark=3.0)),
        (625.0, NO_NOISE),
    ],
)
def test_conditioning_never_increases_entropy(chip, mu_e, noise):
    from qrnglab import adc_output_pmf

    cond = min_entropy_conditional(SourceParams(mu_e), noise, chip)
    uncond = min_entropy_unconditional(
        symbol_pmf(adc_output_pmf(SourceParams(mu_e), noise, chip), chip)
    )
    assert cond.h_min_total <= uncond.h_min_total + 1e-12


def test_quadrature_self_convergence(chip, pixel1):
    base = min_entropy_conditional(
        SourceParams(625.0), pixel1, chip, QuadratureSpec(base_splits=1)
    )
    halved = min_entropy_conditional(
        SourceParams(625.0), pixel1, chip, QuadratureSpec(base_splits=2)
    )
    assert abs(base.p_guess - halved.p_guess) < 1e-5


def test_truncation_bound_reported(chip, pixel1):
    res = min_entropy_conditional(SourceParams(625.0), pixel1, chip)
    assert 0.0 < res.truncation_bound < 1e-10


def test_accepted_range_variant_is_finite_and_close(chip, pixel1):
    plain = min_entropy_conditional(SourceParams(625.0), pixel1, chip)
    acc = min_entropy_conditional(
        SourceParams(625.0), pixel1, chip, accepted_range=(64, 940)
    )
    # acceptance is near-certain at the operating point, so conditioning
    # on it barely moves the result
    assert acc.h_min_per_bit == pytest.approx(plain.h_min_per_bit, abs=1e-6)


# ---------------------------------------------------------------------------
# entropy_curve
# ---------------------------------------------------------------------------


def test_curve_operating_range(chip, pixel1):
    curve = entropy_curve([500.0, 750.0], pixel1, chip)
    assert all(res.h_min_per_bit > 0.98 for _, res in curve)


def test_curve_zero_signal(chip, pixel1):
    ((mu, res),) = entropy_curve([0.0], pixel1, chip)
    assert mu == 0.0
    assert res.h_min_per_bit < 0.01


def test_curve_purity(chip, pixel1):
    alone = min_entropy_conditional(SourceParams(625.0), pixel1, chip)
    within = dict(entropy_curve([500.0, 625.0, 750.0], pixel1, chip))[625.0]
    assert within.p_guess == alone.p_guess


def test_curve_thread_pool_matches_sequential(chip, pixel1, monkeypatch):
    grid = [500.0, 625.0, 750.0]
    seq = entropy_curve(grid, pixel1, chip)
    monkeypatch.setenv("QRNG_LAB_THREADS", "4")
    par = entropy_curve(grid, pixel1, chip)
    assert [(m, r.p_guess) for m, r in seq] == [(m, r.p_guess) for m, r in par]


def test_curve_rejects_bad_grid(chip, pixel1):
    with pytest.raises(ValueError):
        entropy_curve([], pixel1, chip)
    with pytest.raises(ValueError):
        entropy_curve([700.0, 500.0], pixel1, chip)


def test_curve_attaches_mu_e_to_convergence_error(chip, pixel1, monkeypatch):
    def boom(*args, **kwargs):
        raise ConvergenceError("synthetic failure")

    monkeypatch.setattr(entropy_mod, "min_entropy_conditional", boom)
    with pytest.raises(ConvergenceError) as err:
        entropy_mod.entropy_curve([321.0], pixel1, chip)
    assert "321" in str(err.value)
    assert err.value.context == {"mu_e": 321.0}
