"""Statistical characterization of acquisition data: correlations,
photon-transfer linearity, noise-model fitting, and the most-common-value
entropy estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import FitError, UnfittableError
from .model import adc_output_pmf
from .sampler import FrameBatch
from .types import ChipParams, NoiseParams, SourceParams

# ---------------------------------------------------------------------------
# Correlations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationReport:
    """Pairwise Pearson matrix (diagonal 1, NaN rows for dead pixels),
    per-pixel autocorrelation over lags 1..max_lag, and the sampling-noise
    scale 1/sqrt(t_frames) the coefficients should fluctuate within."""

    pairwise: np.ndarray       # (p, p)
    autocorr: np.ndarray       # (p, max_lag)
    sigma_expected: float
    dead_pixels: np.ndarray    # indices with zero variance


def pearson_matrix(batch: FrameBatch) -> np.ndarray:
    """Sample Pearson coefficient for every pixel pair.

    Normalization divides numerator and denominators by t alike, so the
    choice cancels. Zero-variance pixels get NaN off-diagonal entries
    (undefined, deliberately not 0) while the diagonal stays 1.
    """
    codes = batch.codes
    t, p = codes.shape
    if t < 2:
        raise ValueError("need at least 2 frames")
    x = codes.T.astype(np.float64)
    x = x - x.mean(axis=1, keepdims=True)
    var = (x**2).mean(axis=1)
    dead = var == 0.0
    denom = np.sqrt(np.outer(var, var))
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = (x @ x.T) / t / denom
    rho[dead, :] = np.nan
    rho[:, dead] = np.nan
    np.fill_diagonal(rho, 1.0)
    return rho


def autocorrelation(batch: FrameBatch, pixel: int, max_lag: int) -> np.ndarray:
    """Autocorrelation of one pixel's series at lags 1..max_lag.

    Mean and variance are computed once over the full series; the lag-l
    numerator averages the t-l overlapping products. A zero-variance
    series yields NaN at every lag.
    """
    t = batch.n_frames
    if not 1 <= max_lag < t:
        raise ValueError(f"max_lag must be in [1, {t - 1}], got {max_lag}")
    z = batch.codes[:, pixel].astype(np.float64)
    z = z - z.mean()
    var = (z**2).mean()
    out = np.empty(max_lag)
    if var == 0.0:
        out[:] = np.nan
        return out
    for lag in range(1, max_lag + 1):
        out[lag - 1] = np.dot(z[:-lag], z[lag:]) / (t - lag) / var
    return out


def correlation_report(batch: FrameBatch, max_lag: int) -> CorrelationReport:
    """Pairwise and per-pixel lag correlations in one report."""
    rho = pearson_matrix(batch)
    auto = np.vstack(
        [autocorrelation(batch, i, max_lag) for i in range(batch.n_pixels)]
    )
    dead = np.where(np.all(np.isnan(auto), axis=1))[0]
    return CorrelationReport(
        pairwise=rho,
        autocorr=auto,
        sigma_expected=1.0 / np.sqrt(batch.n_frames),
        dead_pixels=dead,
    )


# ---------------------------------------------------------------------------
# Photon-transfer linearity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarMeanFit:
    slope: float
    intercept: float
    r_squared: float


def variance_mean_fit(batches: list[FrameBatch], pixel: int) -> VarMeanFit:
    """Least-squares line through the (mean, variance) points of one pixel
    across acquisitions at different light intensities.

    The code variance is K^2 (mu_e + mu_dark) + sigma_r^2 + quantization
    while the mean is K (mu_e + mu_dark) + const, so the slope estimates
    the gain K.
    """
    if len(batches) < 3:
        raise ValueError("need at least 3 intensity points")
    means = np.array([b.codes[:, pixel].astype(np.float64).mean() for b in batches])
    variances = np.array(
        [b.codes[:, pixel].astype(np.float64).var(ddof=1) for b in batches]
    )
    if np.ptp(means) == 0.0:
        raise ValueError("intensity points are degenerate (all means equal)")
    slope, intercept = np.polyfit(means, variances, 1)
    fitted = slope * means + intercept
    ss_res = float(((variances - fitted) ** 2).sum())
    ss_tot = float(((variances - variances.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return VarMeanFit(slope=float(slope), intercept=float(intercept), r_squared=r2)


# ---------------------------------------------------------------------------
# Noise-model fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseFit:
    params: NoiseParams
    gain_k: float
    residual: float            # Pearson chi-square against the fitted model
    residual_dof: int
    covariance: np.ndarray     # over (mu_r, sigma_r, mu_dark[, gain_k])

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def initial_noise_guess(counts: np.ndarray, chip: ChipParams) -> NoiseParams:
    """Moment-based starting point for the noise fit.

    The third central moment of the codes isolates the Poisson component
    (K^3 mu_dark); the mean then locates mu_r (floor shifts it by -1/2)
    and the leftover variance estimates sigma_r^2.
    """
    counts = np.asarray(counts, dtype=np.float64)
    codes = np.arange(len(counts), dtype=np.float64)
    total = counts.sum()
    m = np.dot(codes, counts) / total
    v = np.dot((codes - m) ** 2, counts) / total
    m3 = np.dot((codes - m) ** 3, counts) / total
    k = chip.gain_k
    mu_dark = max(m3 / k**3, 0.05)
    sigma_r = float(np.sqrt(max(v - k**2 * mu_dark - 1.0 / 12.0, 1e-4)))
    mu_r = float(m - k * mu_dark + 0.5 - chip.adc_offset)
    return NoiseParams(mu_r=mu_r, sigma_r=sigma_r, mu_dark=float(mu_dark))


def _dark_pmf(theta: np.ndarray, chip: ChipParams, tail_eps: float) -> np.ndarray:
    mu_r, sigma_r, mu_dark = theta[:3]
    if len(theta) == 4:
        gain = float(np.clip(theta[3], 1e-3, 1.0))
        chip = replace(chip, gain_k=gain)
    noise = NoiseParams(mu_r=mu_r, sigma_r=max(sigma_r, 1e-6), mu_dark=max(mu_dark, 0.0))
    return adc_output_pmf(SourceParams(0.0), noise, chip, tail_eps).probs


def fit_noise_model(
    dark_histogram: np.ndarray,
    chip: ChipParams,
    init: NoiseParams | None = None,
    fit_gain: bool = False,
    tail_eps: float = 1e-10,
    clip_limit: float = 0.01,
) -> NoiseFit:
    """Maximum-likelihood fit of (mu_r, sigma_r, mu_dark) to a dark-frame
    code histogram (counts over codes 0..z_max; fractional counts allowed).

    The gain is taken as known from the chip parameters unless
    fit_gain=True co-fits it as a fourth parameter. Histograms with more
    than clip_limit of their mass on the boundary codes are rejected as
    clipped: the model cannot see the cut-off mass, so the caller must
    re-acquire with a shifted ADC offset. The likelihood has spurious
    local optima one comb tooth apart (mu_dark +- 1 with mu_r -+ K); the
    optimizer multi-starts across neighboring teeth.
    """
    counts = np.asarray(dark_histogram, dtype=np.float64)
    if counts.ndim != 1 or len(counts) != chip.z_max + 1:
        raise ValueError(f"histogram must have {chip.z_max + 1} bins")
    total = counts.sum()
    if total <= 0:
        raise ValueError("histogram is empty")
    edge_mass = (counts[0] + counts[-1]) / total
    if edge_mass > clip_limit:
        raise UnfittableError(
            f"unfittable: clipped histogram ({edge_mass:.1%} of mass on boundary "
            "codes); re-acquire with a shifted ADC offset"
        )

    if init is None:
        init = initial_noise_guess(counts, chip)

    observed = np.nonzero(counts)[0]
    obs_counts = counts[observed]

    def nll(theta: np.ndarray) -> float:
        pmf = _dark_pmf(theta, chip, tail_eps)
        p = np.clip(pmf[observed], 1e-300, None)
        return -float(np.dot(obs_counts, np.log(p)))

    best = None
    k = chip.gain_k
    for tooth in (0, -1, 1):
        mu_dark0 = init.mu_dark + tooth
        if mu_dark0 <= 0:
            continue
        x0 = [init.mu_r - k * tooth, init.sigma_r, mu_dark0]
        if fit_gain:
            x0.append(k)
        res = optimize.minimize(
            nll,
            np.array(x0),
            method="Nelder-Mead",
            options=dict(xatol=1e-7, fatol=1e-9, maxiter=4000, maxfev=8000),
        )
        if best is None or res.fun < best.fun:
            best = res
    start = [init.mu_r, init.sigma_r, init.mu_dark] + ([k] if fit_gain else [])
    if best is None or not (best.success or best.fun < nll(np.array(start))):
        raise FitError(
            "noise fit did not converge",
            last_iterate=None if best is None else best.x,
        )

    theta = best.x
    cov = _observed_information_cov(nll, theta)
    pmf = _dark_pmf(theta, chip, tail_eps)
    chi2, dof = _pearson_chi2(counts, pmf, n_params=len(theta))
    return NoiseFit(
        params=NoiseParams(
            mu_r=float(theta[0]),
            sigma_r=float(abs(theta[1])),
            mu_dark=float(max(theta[2], 0.0)),
        ),
        gain_k=float(theta[3]) if fit_gain else k,
        residual=chi2,
        residual_dof=dof,
        covariance=cov,
    )


def _observed_information_cov(nll, theta: np.ndarray) -> np.ndarray:
    """Covariance estimate from the numeric Hessian of the negative
    log-likelihood at the optimum."""
    steps = np.array([1e-3, 1e-4, 1e-3, 1e-4])[: len(theta)]
    n = len(theta)
    hess = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = steps[i]
            ej[j] = steps[j]
            hess[i, j] = hess[j, i] = (
                nll(theta + ei + ej)
                - nll(theta + ei - ej)
                - nll(theta - ei + ej)
                + nll(theta - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
    try:
        return np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        return np.full((n, n), np.nan)


def _pearson_chi2(
    counts: np.ndarray, pmf: np.ndarray, n_params: int, min_expected: float = 5.0
) -> tuple[float, int]:
    """Pearson chi-square over bins with adequate expected counts."""
    total = counts.sum()
    expected = total * pmf
    keep = expected >= min_expected
    if keep.sum() <= n_params + 1:
        keep = expected > 0
    chi2 = float(((counts[keep] - expected[keep]) ** 2 / expected[keep]).sum())
    dof = int(keep.sum() - 1 - n_params)
    return chi2, max(dof, 1)


def extrapolate_mu_r(mu_r_fit: float, offset_shift: float) -> float:
    """Map a readout mean fitted at a shifted ADC offset back to the
    default offset (one ADU per offset step)."""
    return mu_r_fit - offset_shift


# ---------------------------------------------------------------------------
# Most-common-value entropy estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class McvResult:
    p_hat: float
    p_upper: float
    h_per_bit: float
    n_symbols: int
    symbol_bits: int


def unpack_symbols(bits: bytes, symbol_bits: int) -> np.ndarray:
    """Unpack a byte sequence into symbols, least-significant-first."""
    if symbol_bits not in (1, 2):
        raise ValueError("symbol_bits must be 1 or 2")
    data = np.frombuffer(bits, dtype=np.uint8)
    per_byte = 8 // symbol_bits
    shifts = np.arange(per_byte, dtype=np.uint8) * symbol_bits
    mask = (1 << symbol_bits) - 1
    return ((data[:, None] >> shifts[None, :]) & mask).reshape(-1)


def mcv_entropy(bits: bytes, symbol_bits: int = 2) -> McvResult:
    """Most-common-value min-entropy estimate of a packed symbol stream,
    per the NIST SP 800-90B MCV definition.

    The modal frequency gets a one-sided 99% confidence penalty:
    p_u = min(1, p_hat + 2.576 sqrt(p_hat (1 - p_hat) / (L - 1))), and the
    per-bit estimate is -log2(p_u) / symbol_bits.
    """
    if len(bits) == 0:
        raise ValueError("empty input")
    symbols = unpack_symbols(bits, symbol_bits)
    length = len(symbols)
    if length < 2:
        raise ValueError("need at least 2 symbols")
    freqs = np.bincount(symbols, minlength=1 << symbol_bits)
    p_hat = float(freqs.max()) / length
    p_upper = min(1.0, p_hat + 2.576 * np.sqrt(p_hat * (1.0 - p_hat) / (length - 1)))
    h = -np.log2(p_upper) / symbol_bits
    return McvResult(
        p_hat=p_hat,
        p_upper=float(p_upper),
        h_per_bit=float(h),
        n_symbols=length,
        symbol_bits=symbol_bits,
    )
