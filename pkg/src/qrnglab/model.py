"""Exact distributions of the ADC output and of the retained symbol.

Everything here is deterministic numerics: truncated Poisson sums,
Gaussian interval masses via the normal CDF, and pushforwards through the
floor/clamp quantizer and the bit-selection rule. No sampling.
"""

from __future__ import annotations

import numpy as np
from scipy import stats
from scipy.special import gammaln, ndtr

from .types import ChipParams, NoiseParams, Pmf, SourceParams

# ---------------------------------------------------------------------------
# Poisson building blocks
# ---------------------------------------------------------------------------


def poisson_pmf(n, mu: float):
    """Poisson probability mu^n e^-mu / n!, evaluated in log space.

    Stable for means and counts in the hundreds (e.g. mu ~ 625, n ~ 800),
    where the direct formula overflows. Accepts a scalar or array n.
    """
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("n must be >= 0")
    if not np.issubdtype(n_arr.dtype, np.integer):
        if not np.all(n_arr == np.floor(n_arr)):
            raise ValueError("n must be integral")
        n_arr = n_arr.astype(np.int64)
    if mu == 0.0:
        out = np.where(n_arr == 0, 1.0, 0.0)
    else:
        out = np.exp(n_arr * np.log(mu) - mu - gammaln(n_arr + 1.0))
    return float(out) if np.isscalar(n) else out


def truncated_poisson_support(mu: float, tail_eps: float) -> tuple[int, int]:
    """Contiguous integer range [n_lo, n_hi] carrying all but tail_eps of
    the Poisson(mu) mass.

    The range grows symmetrically in whole standard deviations around the
    mean until the exact complement mass (via the regularized gamma tail
    functions) clears tail_eps. The whole-sigma stepping is deliberately
    conservative: for mu = 625, tail_eps = 1e-12 it returns the full
    +-8 sqrt(mu) window rather than the tightest admissible range, so the
    truncation never sits at the edge of its budget.
    """
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if not 0.0 < tail_eps < 1.0:
        raise ValueError(f"tail_eps must be in (0, 1), got {tail_eps}")
    if mu == 0.0:
        return (0, 0)
    sd = np.sqrt(mu)
    for k in range(1, 80):
        lo = max(0, int(np.floor(mu - k * sd)))
        hi = int(np.ceil(mu + k * sd))
        outside = stats.poisson.cdf(lo - 1, mu) + stats.poisson.sf(hi, mu)
        if outside <= tail_eps:
            return (lo, hi)
    raise RuntimeError(f"no admissible truncation range found for mu={mu}")


def _poisson_weights(mu: float, tail_eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Support points and Poisson weights over the truncated range."""
    lo, hi = truncated_poisson_support(mu, tail_eps)
    ns = np.arange(lo, hi + 1)
    return ns, poisson_pmf(ns, mu)


# ---------------------------------------------------------------------------
# Classical-noise density
# ---------------------------------------------------------------------------


def noise_pdf(e, noise: NoiseParams, chip: ChipParams, tail_eps: float = 1e-12):
    """Density of the total classical noise E at ADU value(s) e.

    E is the dark-electron staircase smeared by the readout Gaussian:
    sum_n P(n; mu_dark) * Normal(e; mu_r + K n, sigma_r^2). Integrates to
    1 - O(tail_eps) over the real line.
    """
    if noise.sigma_r <= 0:
        raise ValueError("noise_pdf requires sigma_r > 0")
    e_arr = np.atleast_1d(np.asarray(e, dtype=np.float64))
    ns, w = _poisson_weights(noise.mu_dark, tail_eps)
    centers = noise.mu_r + chip.gain_k * ns
    z = (e_arr[:, None] - centers[None, :]) / noise.sigma_r
    dens = np.exp(-0.5 * z**2) / (noise.sigma_r * np.sqrt(2.0 * np.pi))
    out = dens @ w
    return float(out[0]) if np.isscalar(e) else out


# ---------------------------------------------------------------------------
# ADC output distribution
# ---------------------------------------------------------------------------


def adc_output_pmf(
    source: SourceParams,
    noise: NoiseParams,
    chip: ChipParams,
    tail_eps: float = 1e-12,
) -> Pmf:
    """Exact pmf of the ADC code Z over [0, z_max].

    Photo- and dark-electron counts are summed over their truncated
    Poisson supports (both scale by the same gain, so the double sum
    collapses to a convolution over the total electron count), and each
    total is smeared by the readout Gaussian. The code-z bin is the
    Gaussian mass of [z, z+1), with the z = 0 bin extended to (-inf, 1)
    and the top bin to [z_max, inf), which implements the clamp.
    """
    if tail_eps >= 1.0:
        raise ValueError(f"tail_eps must be < 1, got {tail_eps}")
    k = chip.gain_k
    z_max = chip.z_max
    ns_ph, w_ph = _poisson_weights(source.mu_e, tail_eps)
    ns_d, w_d = _poisson_weights(noise.mu_dark, tail_eps)
    w_tot = np.convolve(w_ph, w_d)
    n_tot = np.arange(ns_ph[0] + ns_d[0], ns_ph[-1] + ns_d[-1] + 1)
    centers = k * n_tot + noise.mu_r + chip.adc_offset

    weights = np.zeros(z_max + 1)
    if noise.sigma_r == 0.0:
        codes = np.clip(np.floor(centers).astype(np.int64), 0, z_max)
        np.add.at(weights, codes, w_tot)
    else:
        edges = np.arange(0, z_max + 2, dtype=np.float64)
        cdfs = ndtr((edges[None, :] - centers[:, None]) / noise.sigma_r)
        mass = np.diff(cdfs, axis=1)
        mass[:, 0] += cdfs[:, 0]          # clamp-to-0 case: X < 0
        mass[:, -1] += 1.0 - cdfs[:, -1]  # clamp-to-z_max case: X > z_max
        weights = w_tot @ mass
    return Pmf.from_weights(np.arange(z_max + 1), weights)


# ---------------------------------------------------------------------------
# Bit retention
# ---------------------------------------------------------------------------


def extract_symbol(z, chip: ChipParams):
    """Two-bit symbol built from the retained bits of code z.

    The higher retained bit lands in the symbol's bit 1. For the default
    retained_bits (2, 3) this is (z >> 2) & 3.
    """
    z_arr = np.asarray(z)
    if np.any(z_arr < 0) or np.any(z_arr > chip.z_max):
        raise ValueError(f"code out of range [0, {chip.z_max}]")
    lo, hi = chip.retained_bits
    out = (((z_arr >> hi) & 1) << 1) | ((z_arr >> lo) & 1)
    return int(out) if np.isscalar(z) else out


def symbol_pmf(pmf_z: Pmf, chip: ChipParams) -> Pmf:
    """Pushforward of a code pmf through the bit-selection rule."""
    syms = extract_symbol(pmf_z.support, chip)
    weights = np.bincount(syms, weights=pmf_z.probs, minlength=chip.n_symbols)
    return Pmf.from_weights(np.arange(chip.n_symbols), weights)


def conditional_symbol_pmf(
    e: float,
    source: SourceParams,
    chip: ChipParams,
    tail_eps: float = 1e-12,
) -> Pmf:
    """Distribution of the retained symbol when the classical realization
    is fixed at e (total: readout sample plus gain-scaled dark electrons).

    With e fixed the only randomness left is the photo-electron count:
    Z = clamp(floor(K n_ph + e + offset)). Pure truncated Poisson sum, no
    Gaussian smearing.
    """
    ns, w = _poisson_weights(source.mu_e, tail_eps)
    codes = np.clip(
        np.floor(chip.gain_k * ns + e + chip.adc_offset).astype(np.int64),
        0,
        chip.z_max,
    )
    syms = extract_symbol(codes, chip)
    weights = np.bincount(syms, weights=w, minlength=chip.n_symbols)
    return Pmf.from_weights(np.arange(chip.n_symbols), weights)


# ---------------------------------------------------------------------------
# Pile-up structure
# ---------------------------------------------------------------------------


def pileup_peaks(pmf: Pmf, rel_height: float = 1.5, n_sigma: float = 3.0) -> np.ndarray:
    """Codes whose probability exceeds rel_height times the mean of their
    two neighbors, restricted to the central +-n_sigma region of the pmf.

    With gain below 1 these are the double-height codes fed by two
    electron counts.
    """
    p = pmf.probs
    s = pmf.support
    m, sd = pmf.mean(), pmf.std()
    interior = np.arange(1, len(p) - 1)
    neighbor_mean = 0.5 * (p[interior - 1] + p[interior + 1])
    is_peak = p[interior] > rel_height * neighbor_mean
    central = np.abs(s[interior] - m) <= n_sigma * sd
    return s[interior[is_peak & central]]


def pileup_period_electrons(peak_codes: np.ndarray, chip: ChipParams) -> np.ndarray:
    """Spacing of consecutive pile-up peaks measured in electron steps.

    Peak-to-peak code differences are K/(1-K) on average (4 or 5 codes at
    K = 0.8192); dividing by the gain recovers the electron-domain period
    of the pile-up pattern, 1/(1-K) on average (5 or 6 electrons).
    """
    diffs = np.diff(np.asarray(peak_codes, dtype=np.int64))
    return np.rint(diffs / chip.gain_k).astype(np.int64)
