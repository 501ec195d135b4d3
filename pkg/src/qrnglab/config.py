"""Declarative run configuration: a JSON document validated into the
model types, with unknown keys rejected and every diagnostic carrying the
offending location.

Defaults describe the production chip: gain 0.8192, 10-bit ADC, 64
uniformly lit pixels with the reference pixel-1 noise.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .health import HealthConfig
from .types import (
    ArrayModel,
    ChipParams,
    NoiseParams,
    PixelModel,
    QuadratureSpec,
    REFERENCE_PIXELS,
    SourceParams,
)

_CHIP_KEYS = {"gain_k", "adc_bits", "adc_offset", "retained_bits"}
_NOISE_KEYS = {"mu_r", "sigma_r", "mu_dark"}
_ARRAY_KEYS = {"n_pixels", "mu_e", "noise", "pixels"}
_PIXEL_KEYS = {"mu_e", "noise"}
_QUAD_KEYS = {"tail_eps", "sigma_window", "refine_tol", "fail_tol",
              "max_refinements", "base_splits"}
_HEALTH_KEYS = {"t_minus", "t_plus", "n_minus_max", "n_plus_max",
                "h_min_floor", "epsilon"}
_TOP_KEYS = {"chip", "array", "quadrature", "health", "seed", "grid"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"{where}.{name}: unknown key")


def _number(obj: dict, key: str, where: str, default=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{where}.{key}: required")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration: chip, pixel array, numerics, health test."""

    chip: ChipParams
    model: ArrayModel
    quad: QuadratureSpec
    health: HealthConfig
    seed: int = 1
    grid: tuple[float, ...] = field(default=())

    def digest(self) -> str:
        """Short content hash identifying this configuration in outputs."""
        payload = (
            self.model.digest()
            + repr(self.quad)
            + repr(self.health)
            + repr(self.seed)
            + repr(self.grid)
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def default_config_dict() -> dict:
    noise = REFERENCE_PIXELS[1]
    return {
        "chip": {"gain_k": 0.8192, "adc_bits": 10, "adc_offset": 0.0,
                 "retained_bits": [2, 3]},
        "array": {
            "n_pixels": 64,
            "mu_e": 625.0,
            "noise": {"mu_r": noise.mu_r, "sigma_r": noise.sigma_r,
                      "mu_dark": noise.mu_dark},
        },
        "quadrature": {},
        "health": {"t_minus": 64, "t_plus": 940, "n_minus_max": 1,
                   "n_plus_max": 1, "h_min_floor": 1.96, "epsilon": 1e-6},
        "seed": 1,
    }


def _parse_noise(obj: dict, where: str, default: NoiseParams) -> NoiseParams:
    if obj is None:
        return default
    _check_keys(obj, _NOISE_KEYS, where)
    try:
        return NoiseParams(
            mu_r=float(_number(obj, "mu_r", where, default.mu_r)),
            sigma_r=float(_number(obj, "sigma_r", where, default.sigma_r)),
            mu_dark=float(_number(obj, "mu_dark", where, default.mu_dark)),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(doc: dict) -> RunConfig:
    """Validate a configuration document (already JSON-decoded)."""
    defaults = default_config_dict()
    _check_keys(doc, _TOP_KEYS, "config")

    chip_doc = {**defaults["chip"], **doc.get("chip", {})}
    _check_keys(doc.get("chip", {}), _CHIP_KEYS, "config.chip")
    retained = chip_doc["retained_bits"]
    if (not isinstance(retained, (list, tuple)) or len(retained) != 2
            or not all(isinstance(b, int) for b in retained)):
        raise ConfigError("config.chip.retained_bits: expected two bit indices")
    try:
        chip = ChipParams(
            gain_k=float(_number(chip_doc, "gain_k", "config.chip")),
            adc_bits=int(_number(chip_doc, "adc_bits", "config.chip")),
            adc_offset=float(_number(chip_doc, "adc_offset", "config.chip")),
            retained_bits=(retained[0], retained[1]),
        )
    except ValueError as exc:
        raise ConfigError(f"config.chip: {exc}") from exc

    array_doc = doc.get("array", {})
    _check_keys(array_doc, _ARRAY_KEYS, "config.array")
    base_noise = _parse_noise(
        array_doc.get("noise"), "config.array.noise",
        _parse_noise(defaults["array"]["noise"], "config.array.noise",
                     REFERENCE_PIXELS[1]),
    )
    base_mu_e = float(_number(array_doc, "mu_e", "config.array",
                              defaults["array"]["mu_e"]))
    try:
        if "pixels" in array_doc:
            pixel_docs = array_doc["pixels"]
            if not isinstance(pixel_docs, list) or not pixel_docs:
                raise ConfigError("config.array.pixels: expected a non-empty list")
            pixels = []
            for i, pd in enumerate(pixel_docs):
                where = f"config.array.pixels[{i}]"
                _check_keys(pd, _PIXEL_KEYS, where)
                mu_e = float(_number(pd, "mu_e", where, base_mu_e))
                noise = _parse_noise(pd.get("noise"), f"{where}.noise", base_noise)
                pixels.append(PixelModel(SourceParams(mu_e), noise))
            model = ArrayModel(chip=chip, pixels=tuple(pixels))
        else:
            n_pixels = int(_number(array_doc, "n_pixels", "config.array",
                                   defaults["array"]["n_pixels"]))
            if n_pixels < 1:
                raise ConfigError("config.array.n_pixels: must be >= 1")
            model = ArrayModel.uniform(chip, SourceParams(base_mu_e),
                                       base_noise, n_pixels)
    except ValueError as exc:
        raise ConfigError(f"config.array: {exc}") from exc

    quad_doc = doc.get("quadrature", {})
    _check_keys(quad_doc, _QUAD_KEYS, "config.quadrature")
    try:
        quad = QuadratureSpec(
            tail_eps=float(_number(quad_doc, "tail_eps", "config.quadrature", 1e-12)),
            sigma_window=float(_number(quad_doc, "sigma_window",
                                       "config.quadrature", 8.0)),
            refine_tol=float(_number(quad_doc, "refine_tol",
                                     "config.quadrature", 1e-6)),
            fail_tol=float(_number(quad_doc, "fail_tol", "config.quadrature", 1e-4)),
            max_refinements=int(_number(quad_doc, "max_refinements",
                                        "config.quadrature", 4)),
            base_splits=int(_number(quad_doc, "base_splits", "config.quadrature", 1)),
        )
    except ValueError as exc:
        raise ConfigError(f"config.quadrature: {exc}") from exc

    health_doc = {**defaults["health"], **doc.get("health", {})}
    _check_keys(doc.get("health", {}), _HEALTH_KEYS, "config.health")
    try:
        health = HealthConfig(
            t_minus=int(_number(health_doc, "t_minus", "config.health")),
            t_plus=int(_number(health_doc, "t_plus", "config.health")),
            n_minus_max=int(_number(health_doc, "n_minus_max", "config.health")),
            n_plus_max=int(_number(health_doc, "n_plus_max", "config.health")),
            h_min_floor=float(_number(health_doc, "h_min_floor", "config.health")),
            epsilon=float(_number(health_doc, "epsilon", "config.health")),
        )
    except ValueError as exc:
        raise ConfigError(f"config.health: {exc}") from exc
    if health.t_plus > chip.z_max:
        raise ConfigError(
            f"config.health.t_plus: {health.t_plus} exceeds z_max={chip.z_max}"
        )

    seed = doc.get("seed", defaults["seed"])
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"config.seed: expected an integer, got {seed!r}")

    grid_doc = doc.get("grid", [])
    grid = tuple(parse_grid(grid_doc, "config.grid")) if grid_doc else ()

    return RunConfig(chip=chip, model=model, quad=quad, health=health,
                     seed=seed, grid=grid)


def parse_grid(spec, where: str = "grid") -> list[float]:
    """Accept a grid as a list of numbers, "start:stop:points", or a
    comma-separated list."""
    if isinstance(spec, str):
        text = spec.strip()
        if not text:
            raise ConfigError(f"{where}: empty grid")
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ConfigError(f"{where}: expected start:stop:points, got {spec!r}")
            try:
                start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from exc
            if points < 1:
                raise ConfigError(f"{where}: points must be >= 1")
            if points == 1:
                return [start]
            step = (stop - start) / (points - 1)
            return [start + i * step for i in range(points)]
        try:
            return [float(x) for x in text.split(",")]
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    if isinstance(spec, (list, tuple)):
        if not spec:
            raise ConfigError(f"{where}: empty grid")
        out = []
        for i, x in enumerate(spec):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError(f"{where}[{i}]: expected a number, got {x!r}")
            out.append(float(x))
        return out
    raise ConfigError(f"{where}: expected a list or grid string")


def load_config(path) -> RunConfig:
    """Load and validate a JSON configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}")
    return parse_config(doc)


def default_config() -> RunConfig:
    return parse_config(default_config_dict())
