from pydantic import BaseModel, Field, field_validator, model_validator
from typing import List, Optional, Dict, Any, Callable
from enum import Enum
import math


class InitialKind(str, Enum):
    """Başlangıç koşulu türleri"""
    RAMP = "ramp"
    PIECEWISE_AFFINE = "piecewise_affine"
    SMOOTH = "smooth"


class Variant(str, Enum):
    """Problem varyantları"""
    HOMOGENEOUS = "homogeneous"
    WEAK = "weak"
    SOURCE = "source"
    CONSERVATIVE = "conservative"
    DAMPED = "damped"
    # Sadece harness
    SMOOTH = "smooth"
    U0 = "u0"


class SmoothTarget(BaseModel):
    """Yaklaşılacak düzgün fonksiyon"""
    name: str = "target"
    dim: int = Field(..., ge=1)
    lo: List[float]
    hi: List[float]
    evaluator: Callable
    k: int = Field(..., ge=1)
    norm_bound: float = Field(..., gt=0.0)
    derivative_oracle: Optional[Callable] = None
    noise_level: float = 2.220446049250313e-16

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def check_box(self):
        if len(self.lo) != self.dim or len(self.hi) != self.dim:
            raise ValueError("Kutu sınırları boyutla uyuşmuyor")
        for lo, hi in zip(self.lo, self.hi):
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise ValueError("Kutu dejenere veya sınırsız")
        return self


class InitialCondition(BaseModel):
    """Başlangıç koşulu u0"""
    name: str = "u0"
    kind: InitialKind
    n: int = Field(1, ge=1)
    evaluator: Callable
    exact_net: Optional[Any] = None
    smoothness: Optional[int] = None
    norm_bound: Optional[float] = None
    r: float = Field(math.inf, gt=0.0)
    lipschitz: Optional[float] = None
    sup_norm: Optional[float] = None
    derivative_oracle: Optional[Callable] = None

    class Config:
        arbitrary_types_allowed = True


class VectorFieldProblem(BaseModel):
    """Parametrik lineer taşıma problemi"""
    name: str = "problem"
    n: int = Field(..., ge=1)
    D: int = Field(0, ge=0)
    T: float = Field(..., gt=0.0)
    k: int = Field(3, ge=1)
    V: Callable
    div_V: Optional[Callable] = None
    f: Optional[Callable] = None
    a: Optional[Callable] = None
    f_oracle: Optional[Callable] = None
    a_oracle: Optional[Callable] = None
    f_smoothness: Optional[int] = None
    a_smoothness: Optional[int] = None
    u0: InitialCondition
    growth_C: float = Field(..., gt=0.0)
    ck_norms: Dict[int, float] = {}
    lip: Dict[str, float] = {}
    sup: Dict[str, float] = {}
    K_lo: List[float]
    K_hi: List[float]
    estimated: List[str] = []

    class Config:
        arbitrary_types_allowed = True

    @field_validator("ck_norms")
    @classmethod
    def check_norms(cls, v):
        for order, value in v.items():
            if order < 0 or value < 0:
                raise ValueError("ck_norms negatif olamaz")
        return v

    @model_validator(mode="after")
    def check_box(self):
        if len(self.K_lo) != self.n or len(self.K_hi) != self.n:
            raise ValueError("K kutusu uzay boyutuyla uyuşmuyor")
        if any(hi < lo for lo, hi in zip(self.K_lo, self.K_hi)):
            raise ValueError("K kutusu ters")
        return self

    @property
    def d(self) -> int:
        """Ağ giriş boyutu 1+n+D"""
        return 1 + self.n + self.D

    @property
    def K_radius(self) -> float:
        """|K| = sup_{x in K} |x|"""
        return math.sqrt(sum(max(abs(lo), abs(hi)) ** 2 for lo, hi in zip(self.K_lo, self.K_hi)))
