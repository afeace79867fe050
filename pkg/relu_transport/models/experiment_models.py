from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from typing import List, Optional, Dict, Any, Literal
import hashlib

from .problem_models import Variant
from ..core.errors import ConfigError


def _split_list(value):
    if value is None:
        return value
    if isinstance(value, str):
        return [item.strip() for item in value.replace(";", ",").split(",") if item.strip()]
    return list(value)


class ExperimentConfig(BaseModel):
    """Deney yapılandırması"""
    problem: str = "param-shear"
    field: Optional[str] = None
    variant: Variant = Variant.HOMOGENEOUS
    n_space: int = Field(1, ge=1)
    n_params: int = Field(1, ge=0)
    horizon: float = Field(1.0, gt=0.0)
    k_lo: float = -2.0
    k_hi: float = 2.0
    smoothness: Optional[int] = Field(None, ge=1)
    velocity: Optional[str] = None
    u0: str = "ramp"
    u0_smoothness: Optional[int] = Field(None, ge=1)
    u0_kinks: Optional[List[float]] = None
    u0_values: Optional[List[float]] = None
    source: Optional[str] = None
    damping: Optional[str] = None
    target: Optional[str] = None
    target_dim: int = Field(1, ge=1)
    epsilons: List[float]
    lattice_t: Optional[int] = Field(None, ge=2)
    lattice_x: Optional[int] = Field(None, ge=2)
    lattice_eta: Optional[int] = Field(None, ge=2)
    seed: int = 0
    output_dir: str = "runs"
    bound_source: Literal["estimated", "proof"] = "estimated"
    parallel_builds: bool = False
    direct_baseline: bool = False

    @field_validator("epsilons", "u0_kinks", "u0_values", mode="before")
    @classmethod
    def parse_lists(cls, v):
        return _split_list(v)

    @field_validator("epsilons")
    @classmethod
    def check_epsilons(cls, v):
        if not v:
            raise ValueError("Epsilon listesi boş olamaz")
        for eps in v:
            if not 0.0 < eps < 1.0:
                raise ValueError(f"Epsilon (0,1) aralığında olmalı: {eps}")
        for prev, cur in zip(v, v[1:]):
            if cur >= prev:
                raise ValueError("Epsilon listesi kesin azalan olmalı")
        return v

    @model_validator(mode="after")
    def check_box(self):
        if self.k_hi < self.k_lo:
            raise ValueError("k_hi >= k_lo olmalı")
        return self

    @classmethod
    def from_mapping(cls, values: Dict[str, Any]) -> "ExperimentConfig":
        """Anahtar-değer eşlemesinden yapılandırma oluştur"""
        cleaned = {key.lower(): value for key, value in values.items() if value not in (None, "")}
        try:
            return cls(**cleaned)
        except ValidationError as e:
            raise ConfigError(f"Geçersiz deney yapılandırması: {e}") from e

    def config_hash(self) -> str:
        """Çıktı yolu hariç yapılandırma özeti"""
        payload = self.model_dump_json(exclude={"output_dir", "parallel_builds"})
        return hashlib.sha256(payload.encode()).hexdigest()


class SweepRow(BaseModel):
    """Tek epsilon için ölçüm satırı"""
    epsilon: float
    measured_sup_error: float
    weights: int
    layers: int
    neurons: int
    passed: bool
    certificate_digest: str
    build_ms: float = 0.0
    eval_ms: float = 0.0

    @model_validator(mode="after")
    def check_pass(self):
        if self.passed and not self.measured_sup_error <= self.epsilon:
            raise ValueError("Geçen satırda hata epsilon'u aşamaz")
        return self


class ScalingFit(BaseModel):
    """log W ~ log(1/eps) eğim uyumu"""
    slope: float
    intercept: float
    residual_rms: float
    relative_residual: float
    raw_slope: float
    points: int


class DirectBaseline(BaseModel):
    """u'nun tam alan üzerinde doğrudan düzgün yaklaşımı (karşılaştırma satırı)"""
    epsilon: float
    dim: int
    smoothness: int
    predicted_rate: float
    feasible: bool
    weights: int = 0
    measured_sup_error: Optional[float] = None
    detail: str = ""


class ExperimentResult(BaseModel):
    """Deney sonucu"""
    config_hash: str
    variant: Variant
    problem: str
    rows: List[SweepRow] = []
    fit: Optional[ScalingFit] = None
    direct: List[DirectBaseline] = []
    passed: bool = True
    run_dir: Optional[str] = None


class PropertyCheck(BaseModel):
    """Tek özellik kontrolü"""
    name: str
    passed: bool
    detail: str = ""


class PropertyReport(BaseModel):
    """Özellik paketi raporu"""
    suite: str
    checks: List[PropertyCheck] = []

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)
