import numpy as np
import pytest

from qrnglab import (
    ArrayModel,
    ChipParams,
    NO_NOISE,
    REFERENCE_PIXELS,
    SourceParams,
    adc_output_pmf,
    sample_frames,
)


@pytest.fixture(scope="session")
def chip():
    return ChipParams()


@pytest.fixture(scope="session")
def pixel1():
    return REFERENCE_PIXELS[1]


@pytest.fixture(scope="session")
def noiseless_pmf_625(chip):
    return adc_output_pmf(SourceParams(625.0), NO_NOISE, chip)


@pytest.fixture(scope="session")
def pixel1_pmf_625(chip, pixel1):
    return adc_output_pmf(SourceParams(625.0), pixel1, chip)


@pytest.fixture(scope="session")
def calibration_batch(chip, pixel1):
    """64 independent pixels at the operating point, 10^4 frames."""
    model = ArrayModel.uniform(chip, SourceParams(625.0), pixel1, 64)
    return sample_frames(model, 10_000, seed=20240811)


def assert_pmf_normalized(pmf, tol=1e-9):
    assert abs(pmf.probs.sum() - 1.0) <= tol
    assert np.all(pmf.probs >= 0.0)
