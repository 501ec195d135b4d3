"""Acceptance gate: one test per release criterion, each printing a
pass/fail line (run with -s to see them all).

Criterion 8 is marked as a strict expected failure: for thresholds
(t- = 64, t+ = 940, n+- = 1) the conditional entropy dips to about
0.974/bit over mu_e in [95, 250] while the failure probability is still
essentially zero there, so no sweep over [0, 1200] can certify a
0.98/bit floor at epsilon = 1e-6. The floor is certifiable at 0.96/bit
(see test_health.py). Details in the analysis printed by the test.
"""

import itertools
import time

import numpy as np
import pytest

from qrnglab import (
    ArrayModel,
    ChipParams,
    HealthConfig,
    NO_NOISE,
    NoiseParams,
    Pmf,
    QuadratureSpec,
    REFERENCE_PIXELS,
    SourceParams,
    adc_output_pmf,
    conditional_symbol_pmf,
    export_bitstream,
    failure_probability_from_qs,
    fit_noise_model,
    health_sweep,
    mcv_entropy,
    min_entropy_conditional,
    min_entropy_unconditional,
    pearson_matrix,
    autocorrelation,
    pileup_peaks,
    pileup_period_electrons,
    sample_frames,
    symbol_pmf,
    variance_mean_fit,
    verify_guarantee,
)

OPERATING = SourceParams(625.0)


def _report(n, name, ok, detail):
    print(f"[acceptance] criterion {n} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_1_noiseless_pileup_entropy(chip):
    start = time.perf_counter()
    res = min_entropy_conditional(OPERATING, NO_NOISE, chip)
    elapsed = time.perf_counter() - start
    ok = abs(res.h_min_per_bit - 0.982) <= 0.002 and elapsed < 1.0
    _report(1, "noiseless pile-up entropy", ok,
            f"h/bit={res.h_min_per_bit:.5f} target 0.982+-0.002, {elapsed:.2f}s")
    assert abs(res.h_min_per_bit - 0.982) <= 0.002
    assert elapsed < 1.0


def test_criterion_2_operating_range_entropy(chip, pixel1):
    start = time.perf_counter()
    grid = np.linspace(500.0, 750.0, 26)
    values = [
        min_entropy_conditional(SourceParams(mu), pixel1, chip).h_min_per_bit
        for mu in grid
    ]
    elapsed = time.perf_counter() - start
    worst = min(values)
    ok = worst > 0.98 and elapsed < 60.0
    _report(2, "operating-range entropy", ok,
            f"min h/bit={worst:.5f} over 26 points in [500,750], {elapsed:.1f}s")
    assert worst > 0.98
    assert elapsed < 60.0


def test_criterion_3_unconditional_entropy(chip, pixel1_pmf_625):
    res = min_entropy_unconditional(symbol_pmf(pixel1_pmf_625, chip))
    ok = abs(res.h_min_per_bit - 0.999) <= 0.001
    _report(3, "unconditional entropy", ok,
            f"h/bit={res.h_min_per_bit:.5f} target 0.999+-0.001")
    assert abs(res.h_min_per_bit - 0.999) <= 0.001


def test_criterion_4_mcv_round_trip(chip, pixel1):
    start = time.perf_counter()
    t_frames = 625_000  # 64 pixels * 625k frames * 2 bits = 10 Mbyte packed
    model = ArrayModel.uniform(chip, OPERATING, pixel1, 64)
    batch = sample_frames(model, t_frames, seed=90210)
    bits = export_bitstream(batch, chip)
    result = mcv_entropy(bits, symbol_bits=2)
    elapsed = time.perf_counter() - start
    ok = result.h_per_bit >= 0.99 and len(bits) >= 10_000_000 and elapsed < 60.0
    _report(4, "MCV round trip", ok,
            f"{len(bits)/1e6:.0f} MB, h/bit={result.h_per_bit:.5f} >= 0.99, {elapsed:.1f}s")
    assert len(bits) >= 10_000_000
    assert result.h_per_bit >= 0.99
    assert elapsed < 60.0


def test_criterion_5_pileup_periodicity(chip, noiseless_pmf_625):
    peaks = pileup_peaks(noiseless_pmf_625)
    periods = pileup_period_electrons(peaks, chip)
    expected = 1.0 / (1.0 - chip.gain_k)
    mean_period = float(np.diff(peaks).mean() / chip.gain_k)
    ok = set(periods.tolist()) <= {5, 6} and abs(mean_period - expected) <= 0.25
    _report(5, "pile-up periodicity", ok,
            f"period steps {sorted(set(periods.tolist()))}, mean {mean_period:.2f} "
            f"vs 1/(1-K)={expected:.2f}")
    assert set(periods.tolist()) <= {5, 6}
    assert abs(mean_period - expected) <= 0.25


def test_criterion_6_correlation_calibration(calibration_batch):
    t = calibration_batch.n_frames
    p = calibration_batch.n_pixels
    rho = pearson_matrix(calibration_batch)
    off = rho[np.triu_indices(p, k=1)]
    std_ok = abs(off.std() / (1.0 / np.sqrt(t)) - 1.0) <= 0.2
    auto = np.vstack(
        [autocorrelation(calibration_batch, i, 100) for i in range(p)]
    )
    within = np.abs(auto) < 3.0 / np.sqrt(t)
    frac = within.mean()
    ok = std_ok and frac >= 0.99
    _report(6, "correlation calibration", ok,
            f"pairwise std={off.std():.5f} (target 0.01+-20%), "
            f"{frac:.2%} of autocorr values in 3-sigma band")
    assert std_ok
    assert frac >= 0.99


def test_criterion_7_noise_fit_round_trip():
    chip = ChipParams(adc_offset=16.0)
    results = []
    for label, noise in REFERENCE_PIXELS.items():
        model = ArrayModel.uniform(chip, SourceParams(0.0), noise, 1)
        batch = sample_frames(model, 1_000_000, seed=42_000 + label)
        counts = np.bincount(batch.codes[:, 0], minlength=chip.z_max + 1).astype(float)
        fit = fit_noise_model(counts, chip)
        err = abs(fit.params.mu_dark - noise.mu_dark)
        se = fit.stderr[2]
        results.append((label, fit.params.mu_dark, noise.mu_dark, err, se))
    ok = all(err <= 3.0 * se for _, _, _, err, se in results)
    detail = ", ".join(
        f"px{lbl}: {est:.3f} vs {truth} ({err/se:.1f} SE)"
        for lbl, est, truth, err, se in results
    )
    _report(7, "noise-fit round trip", ok, detail)
    for label, est, truth, err, se in results:
        assert err <= 3.0 * se, f"pixel {label}: {est} vs {truth} ({err/se:.1f} SE)"


def test_gain_slope_recovery(chip, pixel1):
    # replaces the hardware light-sweep: the variance-vs-mean line of
    # synthetic acquisitions recovers the gain
    batches = []
    model0 = ArrayModel.uniform(chip, SourceParams(0.0), pixel1, 1)
    for i, mu in enumerate(np.arange(50.0, 501.0, 50.0)):
        batches.append(sample_frames(model0.with_mu_e(mu), 20_000, seed=3_000 + i))
    fit = variance_mean_fit(batches, 0)
    ok = abs(fit.slope - chip.gain_k) <= 0.03 and fit.r_squared > 0.99
    _report("6/7 supplement", "gain slope recovery", ok,
            f"slope={fit.slope:.4f} vs K={chip.gain_k}, r2={fit.r_squared:.4f}")
    assert abs(fit.slope - chip.gain_k) <= 0.03
    assert fit.r_squared > 0.99


@pytest.mark.xfail(
    strict=True,
    reason=(
        "unattainable as specified: with thresholds (64, 940, 1, 1) the "
        "conditional entropy dips to ~0.974/bit for mu_e in [95, 250] while "
        "p_fail is ~0 there (the alarm only saturates below mu_e~90), so a "
        "0.98/bit floor cannot be certified at epsilon=1e-6; 0.96/bit can "
        "(verified in test_health.py). Confirmed against an independent "
        "Monte-Carlo estimate of the conditional guessing probability."
    ),
)
def test_criterion_8_health_test_shape(chip, pixel1):
    cfg = HealthConfig(t_minus=64, t_plus=940, n_minus_max=1, n_plus_max=1,
                       h_min_floor=0.98 * 2, epsilon=1e-6)
    model = ArrayModel.uniform(chip, OPERATING, pixel1, 64)
    grid = np.linspace(0.0, 1200.0, 49)
    sweep = health_sweep(grid, model, cfg)
    drops_without_alarm = [
        pt for pt in sweep
        if pt.avg_h_min_per_bit < 0.98 and pt.p_fail < 1.0 - 1e-9
    ]
    holds, witnesses = verify_guarantee(sweep, cfg)
    ok = not drops_without_alarm and holds
    _report(8, "health-test shape", ok,
            f"{len(drops_without_alarm)} sub-floor points without full alarm, "
            f"guarantee witnesses at mu_e="
            f"{[round(w.mu_e, 1) for w in witnesses] or 'none'}")
    assert not drops_without_alarm, (
        "entropy below 0.98/bit at mu_e="
        f"{[round(p.mu_e, 1) for p in drops_without_alarm]} with p_fail "
        f"{[round(p.p_fail, 6) for p in drops_without_alarm]}"
    )
    assert holds


def test_criterion_9_property_suite(chip, pixel1):
    details = []

    # pmf normalization at 1e-9
    for pmf in (
        adc_output_pmf(OPERATING, pixel1, chip),
        adc_output_pmf(SourceParams(0.0), pixel1, chip),
        conditional_symbol_pmf(0.49, OPERATING, chip),
    ):
        assert abs(pmf.probs.sum() - 1.0) <= 1e-9
    details.append("normalization<=1e-9")

    # analytic pmf vs Monte-Carlo oracle at 4 SE per code
    rng = np.random.default_rng(1234)
    n = 2_000_000
    chip4 = ChipParams(gain_k=0.8192, adc_bits=4, retained_bits=(1, 2))
    noise = NoiseParams(mu_r=1.3, sigma_r=0.8, mu_dark=1.5)
    pmf4 = adc_output_pmf(SourceParams(6.0), noise, chip4)
    x = 0.8192 * (rng.poisson(6.0, n) + rng.poisson(1.5, n)) + rng.normal(1.3, 0.8, n)
    codes = np.clip(np.floor(x).astype(np.int64), 0, chip4.z_max)
    freq = np.bincount(codes, minlength=16) / n
    se = np.sqrt(pmf4.probs * (1 - pmf4.probs) / n)
    assert np.all(np.abs(freq - pmf4.probs) <= 4 * se + 1e-12)
    details.append("MC agreement<=4SE")

    # DP failure probability vs exhaustive enumeration, exact
    rng = np.random.default_rng(55)
    cfg = HealthConfig(10, 20, 1, 1)
    for p in (3, 6):
        qm = rng.uniform(0, 0.3, p)
        qp = rng.uniform(0, 0.3, p)
        exact = 0.0
        for outcome in itertools.product((0, 1, 2), repeat=p):
            prob = 1.0
            nm = np_ = 0
            for i, o in enumerate(outcome):
                if o == 0:
                    prob *= qm[i]
                    nm += 1
                elif o == 2:
                    prob *= qp[i]
                    np_ += 1
                else:
                    prob *= 1 - qm[i] - qp[i]
            if nm > 1 or np_ > 1:
                exact += prob
        assert abs(failure_probability_from_qs(qm, qp, cfg) - exact) < 1e-12
    details.append("DP==enumeration<1e-12")

    # gain-1 identity at 1e-12
    from scipy import stats
    ident = adc_output_pmf(SourceParams(5.0), NO_NOISE, ChipParams(gain_k=1.0))
    assert np.max(np.abs(ident.probs - stats.poisson.pmf(ident.support, 5.0))) < 1e-12
    details.append("gain-1 identity<1e-12")

    # quadrature self-convergence at 1e-5
    a = min_entropy_conditional(OPERATING, pixel1, chip, QuadratureSpec(base_splits=1))
    b = min_entropy_conditional(OPERATING, pixel1, chip, QuadratureSpec(base_splits=2))
    assert abs(a.p_guess - b.p_guess) < 1e-5
    details.append("quadrature stable<1e-5")

    # bit-identical reruns
    model = ArrayModel.uniform(chip, OPERATING, pixel1, 4)
    assert (
        sample_frames(model, 500, seed=1).digest()
        == sample_frames(model, 500, seed=1).digest()
    )
    details.append("rerun bit-identical")

    _report(9, "property suite", True, ", ".join(details))
