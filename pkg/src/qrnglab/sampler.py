"""Seeded synthetic acquisition: Monte-Carlo frames from the generative
model, bit packing, and the binary frame-file format.

Reproducibility contract: frames are drawn from counter-based Philox
streams, one per pixel, keyed by (seed, pixel index). A batch is fully
determined by (model, t_frames, seed) regardless of how the per-pixel
work is scheduled.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .model import extract_symbol
from .types import ArrayModel, ChipParams

FRAME_MAGIC = b"QRNGFRM1"
HEADER_SIZE = 16  # magic (8) + u16 n_pixels + u16 adc_bits + u32 n_frames


@dataclass(frozen=True)
class FrameBatch:
    """T x P matrix of ADC codes plus the provenance needed to regenerate it."""

    codes: np.ndarray  # (t_frames, n_pixels) uint16
    seed: int
    model_digest: str

    @property
    def n_frames(self) -> int:
        return self.codes.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.codes.shape[1]

    def digest(self) -> str:
        """Content hash of the batch (codes, seed and generating model)."""
        h = hashlib.sha256()
        h.update(self.model_digest.encode())
        h.update(struct.pack("<qII", self.seed, *self.codes.shape))
        h.update(np.ascontiguousarray(self.codes, dtype="<u2").tobytes())
        return h.hexdigest()


def _pixel_rng(seed: int, pixel_index: int) -> np.random.Generator:
    """Independent counter-based stream for one pixel of one acquisition."""
    ss = np.random.SeedSequence((int(seed) & 0xFFFFFFFFFFFFFFFF, pixel_index))
    return np.random.Generator(np.random.Philox(ss))


def sample_frames(model: ArrayModel, t_frames: int, seed: int) -> FrameBatch:
    """Draw t_frames acquisition frames from the array model.

    Per pixel and frame, independently: n_ph ~ Poisson(mu_e),
    n_dark ~ Poisson(mu_dark), r ~ Normal(mu_r, sigma_r^2), then
    code = clamp(floor(K*(n_ph + n_dark) + r + offset), 0, z_max).
    """
    if t_frames < 1:
        raise ValueError(f"t_frames must be >= 1, got {t_frames}")
    chip = model.chip
    k = chip.gain_k
    codes = np.empty((t_frames, model.n_pixels), dtype=np.uint16)
    for i, pixel in enumerate(model.pixels):
        rng = _pixel_rng(seed, i)
        n_ph = rng.poisson(pixel.source.mu_e, t_frames)
        n_dark = rng.poisson(pixel.noise.mu_dark, t_frames)
        if pixel.noise.sigma_r > 0.0:
            r = rng.normal(pixel.noise.mu_r, pixel.noise.sigma_r, t_frames)
        else:
            r = pixel.noise.mu_r
        x = k * (n_ph + n_dark) + r + chip.adc_offset
        codes[:, i] = np.clip(np.floor(x), 0, chip.z_max).astype(np.uint16)
    return FrameBatch(codes=codes, seed=int(seed), model_digest=model.digest())


def export_bitstream(batch: FrameBatch, chip: ChipParams) -> bytes:
    """Pack the retained 2-bit symbols into bytes.

    Symbols are taken frame-major, pixel-minor (sequential readout order)
    and packed four to a byte with the first symbol in the least
    significant position. A trailing partial byte, if any, is zero-padded.
    """
    syms = extract_symbol(batch.codes.reshape(-1).astype(np.int64), chip)
    pad = (-len(syms)) % 4
    if pad:
        syms = np.concatenate([syms, np.zeros(pad, dtype=syms.dtype)])
    quads = syms.reshape(-1, 4).astype(np.uint8)
    packed = quads[:, 0] | (quads[:, 1] << 2) | (quads[:, 2] << 4) | (quads[:, 3] << 6)
    return packed.tobytes()


# ---------------------------------------------------------------------------
# Binary frame-file format
# ---------------------------------------------------------------------------


def write_frames(path, batch: FrameBatch, chip: ChipParams) -> None:
    """Write a batch in the binary frame format: 16-byte header
    (magic "QRNGFRM1", u16 n_pixels, u16 adc_bits, u32 n_frames, all
    little-endian) followed by t*p codes as little-endian u16."""
    header = FRAME_MAGIC + struct.pack(
        "<HHI", batch.n_pixels, chip.adc_bits, batch.n_frames
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(batch.codes, dtype="<u2").tobytes())


def read_frames(path) -> tuple[np.ndarray, int]:
    """Read a frame file; returns (codes as (t, p) uint16 array, adc_bits)."""
    with open(path, "rb") as fh:
        header = fh.read(HEADER_SIZE)
        if len(header) != HEADER_SIZE or header[:8] != FRAME_MAGIC:
            raise ValueError(f"{path}: not a frame file (bad magic)")
        n_pixels, adc_bits, n_frames = struct.unpack("<HHI", header[8:])
        payload = fh.read()
    expected = 2 * n_pixels * n_frames
    if len(payload) != expected:
        raise ValueError(
            f"{path}: truncated frame file ({len(payload)} payload bytes, "
            f"expected {expected})"
        )
    codes = np.frombuffer(payload, dtype="<u2").reshape(n_frames, n_pixels)
    return codes.astype(np.uint16), adc_bits
