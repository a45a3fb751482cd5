"""Pipeline configuration: nested dataclasses loaded from a TOML file.

Every tunable of the pipeline lives here, with defaults. A config file
only needs the keys it overrides::

    [detect]
    r_healthy = 5

    [levelset]
    iterations = 150
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .filters import DiffusionParams, DoGParams
from .stains import DEFAULT_EOSIN, DEFAULT_HEMATOXYLIN, StainMatrix

SCHEMA = "nucleograde/1"


@dataclass
class StainConfig:
    hematoxylin: tuple[float, float, float] = DEFAULT_HEMATOXYLIN
    eosin: tuple[float, float, float] = DEFAULT_EOSIN
    residual: tuple[float, float, float] | None = None
    background: float = 255.0
    max_concentration: float = 1.5
    dark_nuclei: bool = True

    def matrix(self) -> StainMatrix:
        return StainMatrix.from_vectors(self.hematoxylin, self.eosin, self.residual)


@dataclass
class PreprocessConfig:
    diffusion_iterations: int = 10
    diffusion_kappa: float = 15.0
    diffusion_rate: float = 0.2
    log_sigma: float = 2.0
    log_threshold: float = 1.0

    @property
    def diffusion(self) -> DiffusionParams:
        return DiffusionParams(self.diffusion_iterations, self.diffusion_kappa,
                               self.diffusion_rate)


@dataclass
class DetectConfig:
    close_radius: int = 3
    r_healthy: int = 6
    r_seed: int | None = None       # None: same as r_healthy
    dog_sigma1: float = 4.0
    dog_sigma2: float = 10.0
    dog_threshold: float = 200.0
    min_seed_area: int = 2

    @property
    def dog(self) -> DoGParams:
        return DoGParams(self.dog_sigma1, self.dog_sigma2)

    @property
    def seed_radius(self) -> int:
        return self.r_healthy if self.r_seed is None else self.r_seed


@dataclass
class LevelSetConfig:
    dt: float = 1.0
    mu: float | None = None         # None: 0.2 / dt
    lam: float = 5.0
    alpha: float = -1.5
    epsilon: float = 1.5
    iterations: int = 120
    edge_sigma: float = 0.8
    c0: float = 2.0
    crop_padding: int = 15
    split_core_ratio: float = 0.5   # 0 disables splitting of merged regions


@dataclass
class FeatureConfig:
    lbp_points: int = 8
    lbp_radius: float = 1.0
    bilateral_sigma_space: float = 1.5
    bilateral_sigma_range: float = 25.0
    nucleoli_gamma: float = 2.0
    nucleoli_threshold: float = 100.0
    nucleoli_open_radius: int = 1
    nucleoli_max_fraction: float = 0.25
    circ_max: float = 20.0
    svm_c: float = 10.0


@dataclass
class ScoringConfig:
    chromatin_margin: float = 10.0
    contour_margin_ratio: float = 0.15
    cv3: float = 0.5


@dataclass
class BaselineConfig:
    normal_area: float = 113.0
    normal_mean_intensity: float = 120.0
    normal_circularity: float = 12.5
    normal_nucleoli: float = 0.0
    annotations: str | None = None  # CSV of healthy-nucleus centres


@dataclass
class RunConfig:
    workers: int = 1
    quarters: bool = True           # split each image into four quadrants
    match_radius: float = 8.0
    nucleoli_model: str | None = None


@dataclass
class PipelineConfig:
    stains: StainConfig = field(default_factory=StainConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    detect: DetectConfig = field(default_factory=DetectConfig)
    levelset: LevelSetConfig = field(default_factory=LevelSetConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self) -> "PipelineConfig":
        """Raise :class:`ConfigError` if any component invariant fails."""
        try:
            self.stains.matrix().inverse()
            self.preprocess.diffusion
            self.detect.dog
            from .levelset import DrlseParams
            DrlseParams.from_config(self.levelset)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(str(exc)) from exc
        checks = [
            (self.stains.max_concentration > 0, "stains.max_concentration must be > 0"),
            (self.stains.background > 0, "stains.background must be > 0"),
            (self.preprocess.log_sigma > 0, "preprocess.log_sigma must be > 0"),
            (self.detect.close_radius >= 1, "detect.close_radius must be >= 1"),
            (self.detect.r_healthy >= 1, "detect.r_healthy must be >= 1"),
            (self.detect.seed_radius >= 1, "detect.r_seed must be >= 1"),
            (self.levelset.edge_sigma > 0, "levelset.edge_sigma must be > 0"),
            (self.levelset.c0 > 0, "levelset.c0 must be > 0"),
            (0 <= self.levelset.split_core_ratio < 1, "levelset.split_core_ratio must lie in [0, 1)"),
            (self.features.lbp_points >= 1, "features.lbp_points must be >= 1"),
            (self.features.lbp_radius > 0, "features.lbp_radius must be > 0"),
            (self.features.svm_c > 0, "features.svm_c must be > 0"),
            (self.baseline.normal_area > 0, "baseline.normal_area must be > 0"),
            (self.baseline.normal_mean_intensity > 0, "baseline.normal_mean_intensity must be > 0"),
            (self.baseline.normal_circularity > 0, "baseline.normal_circularity must be > 0"),
            (self.baseline.normal_nucleoli >= 0, "baseline.normal_nucleoli must be >= 0"),
            (self.run.workers >= 1, "run.workers must be >= 1"),
            (self.run.match_radius > 0, "run.match_radius must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"[{where}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name)
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}" if where else name)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def from_dict(data: dict) -> PipelineConfig:
    return _build(PipelineConfig, data, "").validate()


def load_config(path: str | Path | None) -> PipelineConfig:
    """Read a TOML config; ``None`` gives the defaults."""
    if path is None:
        return PipelineConfig().validate()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return from_dict(data)


def dump_config(cfg: PipelineConfig) -> str:
    """TOML text with every parameter spelled out (``None`` values omitted)."""
    import tomli_w

    def strip(d):
        return {k: strip(v) if isinstance(v, dict) else v
                for k, v in d.items() if v is not None}

    return tomli_w.dumps(strip(cfg.to_dict()))
