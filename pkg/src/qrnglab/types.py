"""Parameter and result containers for the chip entropy model.

The generative chain modeled throughout the package is

    X = K * (N_ph + N_dark) + R + offset,      Z = clamp(floor(X), 0, z_max)

with N_ph ~ Poisson(mu_e) the photo-electrons, N_dark ~ Poisson(mu_dark)
the dark electrons, R ~ Normal(mu_r, sigma_r^2) the readout noise and K
the electron-to-ADU conversion gain. The entropy symbol is built from two
retained bits of the ADC code Z.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChipParams:
    """Static converter parameters shared by every pixel of the array.

    gain_k is the ADU-per-electron conversion factor; values below 1 cause
    the pile-up effect (two electron counts landing on one code).
    retained_bits are the bit indices kept for the output symbol, LSB = 0,
    ordered (low, high).
    """

    gain_k: float = 0.8192
    adc_bits: int = 10
    adc_offset: float = 0.0
    retained_bits: tuple[int, int] = (2, 3)

    def __post_init__(self):
        if not 0.0 < self.gain_k <= 1.0:
            raise ValueError(f"gain_k must be in (0, 1], got {self.gain_k}")
        if self.adc_bits < 2:
            raise ValueError(f"adc_bits must be >= 2, got {self.adc_bits}")
        lo, hi = self.retained_bits
        if lo == hi:
            raise ValueError("retained_bits must be distinct")
        if not (0 <= lo < self.adc_bits and 0 <= hi < self.adc_bits):
            raise ValueError(
                f"retained_bits {self.retained_bits} out of range for "
                f"{self.adc_bits}-bit codes"
            )

    @property
    def z_min(self) -> int:
        return 0

    @property
    def z_max(self) -> int:
        return (1 << self.adc_bits) - 1

    @property
    def n_retained_bits(self) -> int:
        return 2

    @property
    def n_symbols(self) -> int:
        return 4


@dataclass(frozen=True)
class NoiseParams:
    """Classical-noise parameters of one pixel (ADU for mu_r/sigma_r,
    electrons for mu_dark). sigma_r = 0 selects the degenerate
    (noise-free readout) special case."""

    mu_r: float
    sigma_r: float
    mu_dark: float

    def __post_init__(self):
        if self.sigma_r < 0:
            raise ValueError(f"sigma_r must be >= 0, got {self.sigma_r}")
        if self.mu_dark < 0:
            raise ValueError(f"mu_dark must be >= 0, got {self.mu_dark}")


NO_NOISE = NoiseParams(mu_r=0.0, sigma_r=0.0, mu_dark=0.0)

# Noise characterization of four reference pixels of the production sensor
# (mu_r extrapolated to the default ADC offset).
REFERENCE_PIXELS: dict[int, NoiseParams] = {
    1: NoiseParams(mu_r=-13.6, sigma_r=0.21, mu_dark=17.2),
    2: NoiseParams(mu_r=-16.8, sigma_r=0.22, mu_dark=18.0),
    3: NoiseParams(mu_r=-14.4, sigma_r=0.23, mu_dark=17.2),
    4: NoiseParams(mu_r=-13.6, sigma_r=0.21, mu_dark=19.0),
}


@dataclass(frozen=True)
class SourceParams:
    """Light-source strength seen by one pixel.

    mu_e is the mean photo-electron count per integration window, i.e. the
    product of pixel efficiency and mean emitted photon number. Only this
    product ever enters a computation.
    """

    mu_e: float

    def __post_init__(self):
        if self.mu_e < 0:
            raise ValueError(f"mu_e must be >= 0, got {self.mu_e}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the conditional-entropy integration.

    tail_eps bounds the Poisson mass dropped by every truncated sum.
    sigma_window is the half-width, in readout sigmas, of the integration
    window around each dark-electron mixture component. base_splits
    subdivides each smooth piece of the integrand (the integral is exact
    for any value; the knob exists to demonstrate refinement stability).
    Successive refinements must agree within refine_tol; disagreement
    beyond fail_tol after max_refinements raises ConvergenceError.
    """

    tail_eps: float = 1e-12
    sigma_window: float = 8.0
    refine_tol: float = 1e-6
    fail_tol: float = 1e-4
    max_refinements: int = 4
    base_splits: int = 1

    def __post_init__(self):
        if not 0.0 < self.tail_eps < 1.0:
            raise ValueError(f"tail_eps must be in (0, 1), got {self.tail_eps}")
        if self.sigma_window <= 0:
            raise ValueError("sigma_window must be positive")
        if self.base_splits < 1:
            raise ValueError("base_splits must be >= 1")


class Pmf:
    """Finite probability mass function over integer codes or symbols.

    support is an ascending integer array; probs the matching
    probabilities, non-negative and summing to 1 within 1e-9.
    """

    __slots__ = ("support", "probs")

    def __init__(self, support, probs):
        support = np.asarray(support, dtype=np.int64)
        probs = np.asarray(probs, dtype=np.float64)
        if support.shape != probs.shape or support.ndim != 1:
            raise ValueError("support and probs must be 1-d arrays of equal length")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within 1e-9")
        self.support = support
        self.probs = probs

    @classmethod
    def from_weights(cls, support, weights) -> "Pmf":
        """Build a Pmf from non-negative weights, normalizing their sum.

        Tiny negative weights from floating-point cancellation (above
        -1e-12) are clipped to zero.
        """
        weights = np.asarray(weights, dtype=np.float64)
        if np.any(weights < -1e-12):
            raise ValueError("weights must be non-negative")
        weights = np.maximum(weights, 0.0)
        total = weights.sum()
        if total <= 0:
            raise ValueError("weights must have positive total mass")
        return cls(support, weights / total)

    def __len__(self) -> int:
        return len(self.support)

    def p(self, value: int) -> float:
        """Probability of a single support point (0 if absent)."""
        idx = np.searchsorted(self.support, value)
        if idx < len(self.support) and self.support[idx] == value:
            return float(self.probs[idx])
        return 0.0

    def max_prob(self) -> float:
        return float(self.probs.max())

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def std(self) -> float:
        m = self.mean()
        return float(np.sqrt(np.dot((self.support - m) ** 2, self.probs)))

    def mass_below(self, threshold: int) -> float:
        """Total probability of support values strictly below threshold."""
        return float(self.probs[self.support < threshold].sum())

    def mass_above(self, threshold: int) -> float:
        """Total probability of support values strictly above threshold."""
        return float(self.probs[self.support > threshold].sum())

    def __repr__(self) -> str:
        return (
            f"Pmf(support=[{self.support[0]}..{self.support[-1]}], "
            f"n={len(self)}, max={self.max_prob():.4g})"
        )


@dataclass(frozen=True)
class EntropyResult:
    """Guessing probability and min-entropy of the retained symbol.

    truncation_bound is the additive bound on p_guess contributed by all
    tail truncations; it has already been added to p_guess so the entropy
    figure is conservative.
    """

    p_guess: float
    h_min_total: float
    h_min_per_bit: float
    truncation_bound: float = 0.0

    @classmethod
    def from_p_guess(
        cls, p_guess: float, n_bits: int = 2, truncation_bound: float = 0.0
    ) -> "EntropyResult":
        p = min(p_guess + truncation_bound, 1.0)
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p_guess must be in (0, 1], got {p}")
        h = -np.log2(p)
        return cls(
            p_guess=p,
            h_min_total=float(h),
            h_min_per_bit=float(h / n_bits),
            truncation_bound=truncation_bound,
        )


@dataclass(frozen=True)
class PixelModel:
    """Source strength plus noise parameters of a single pixel."""

    source: SourceParams
    noise: NoiseParams


@dataclass(frozen=True)
class ArrayModel:
    """A pixel array sharing one ADC: chip parameters plus per-pixel models."""

    chip: ChipParams
    pixels: tuple[PixelModel, ...]

    def __post_init__(self):
        if len(self.pixels) < 1:
            raise ValueError("array needs at least one pixel")

    @property
    def n_pixels(self) -> int:
        return len(self.pixels)

    @classmethod
    def uniform(
        cls,
        chip: ChipParams,
        source: SourceParams,
        noise: NoiseParams,
        n_pixels: int,
    ) -> "ArrayModel":
        """Array of n_pixels identical pixels."""
        return cls(chip=chip, pixels=(PixelModel(source, noise),) * n_pixels)

    def with_mu_e(self, mu_e: float) -> "ArrayModel":
        """Copy of the model with every pixel's source strength replaced."""
        src = SourceParams(mu_e)
        return ArrayModel(
            chip=self.chip,
            pixels=tuple(PixelModel(src, p.noise) for p in self.pixels),
        )

    def digest(self) -> str:
        """Content hash of the model, stable across runs and platforms."""
        h = hashlib.sha256()
        c = self.chip
        h.update(
            struct.pack(
                "<dddii",
                c.gain_k,
                c.adc_offset,
                0.0,
                c.adc_bits,
                len(self.pixels),
            )
        )
        h.update(struct.pack("<ii", *c.retained_bits))
        for p in self.pixels:
            h.update(
                struct.pack(
                    "<dddd",
                    p.source.mu_e,
                    p.noise.mu_r,
                    p.noise.sigma_r,
                    p.noise.mu_dark,
                )
            )
        return h.hexdigest()
