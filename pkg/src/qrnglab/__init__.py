"""qrnglab: entropy model, simulator and statistical toolkit for a
CMOS-sensor quantum random number generator chip.

The chip turns Poisson-distributed photo-electron counts into ADC codes
through a sub-unity gain, keeps two bits of each code as entropy bits,
and guards itself with a threshold health test. This package computes the
exact code and symbol distributions, the conditional min-entropy against
an adversary holding the classical noise, health-test failure
probabilities, and generates reproducible synthetic acquisitions for
statistical validation.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    FitError,
    QrngLabError,
    UnfittableError,
)
from .types import (
    ArrayModel,
    ChipParams,
    EntropyResult,
    NO_NOISE,
    NoiseParams,
    PixelModel,
    Pmf,
    QuadratureSpec,
    REFERENCE_PIXELS,
    SourceParams,
)
from .model import (
    adc_output_pmf,
    conditional_symbol_pmf,
    extract_symbol,
    noise_pdf,
    pileup_peaks,
    pileup_period_electrons,
    poisson_pmf,
    symbol_pmf,
    truncated_poisson_support,
)
from .entropy import entropy_curve, min_entropy_conditional, min_entropy_unconditional
from .sampler import FrameBatch, export_bitstream, read_frames, sample_frames, write_frames
from .estimators import (
    CorrelationReport,
    McvResult,
    NoiseFit,
    VarMeanFit,
    autocorrelation,
    correlation_report,
    extrapolate_mu_r,
    fit_noise_model,
    initial_noise_guess,
    mcv_entropy,
    pearson_matrix,
    unpack_symbols,
    variance_mean_fit,
)
from .health import (
    FrameVerdict,
    HealthConfig,
    HealthSweepPoint,
    failure_probability,
    failure_probability_from_qs,
    health_sweep,
    judge_batch,
    judge_frame,
    out_of_range_probs,
    verify_guarantee,
)
from .config import RunConfig, default_config, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "ArrayModel",
    "ChipParams",
    "ConfigError",
    "ConvergenceError",
    "CorrelationReport",
    "EntropyResult",
    "FitError",
    "FrameBatch",
    "FrameVerdict",
    "HealthConfig",
    "HealthSweepPoint",
    "McvResult",
    "NO_NOISE",
    "NoiseFit",
    "NoiseParams",
    "PixelModel",
    "Pmf",
    "QrngLabError",
    "QuadratureSpec",
    "REFERENCE_PIXELS",
    "RunConfig",
    "SourceParams",
    "UnfittableError",
    "VarMeanFit",
    "adc_output_pmf",
    "autocorrelation",
    "conditional_symbol_pmf",
    "correlation_report",
    "default_config",
    "entropy_curve",
    "export_bitstream",
    "extract_symbol",
    "extrapolate_mu_r",
    "failure_probability",
    "failure_probability_from_qs",
    "fit_noise_model",
    "health_sweep",
    "initial_noise_guess",
    "judge_batch",
    "judge_frame",
    "load_config",
    "mcv_entropy",
    "min_entropy_conditional",
    "min_entropy_unconditional",
    "noise_pdf",
    "out_of_range_probs",
    "parse_config",
    "pearson_matrix",
    "pileup_peaks",
    "pileup_period_electrons",
    "poisson_pmf",
    "read_frames",
    "sample_frames",
    "symbol_pmf",
    "truncated_poisson_support",
    "unpack_symbols",
    "variance_mean_fit",
    "verify_guarantee",
    "write_frames",
]
