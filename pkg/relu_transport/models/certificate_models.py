from pydantic import BaseModel, Field, model_validator
from typing import List, Optional, Dict, Any
from enum import Enum

from .network_models import SizeReport


class ConstructionId(str, Enum):
    """Bileşik ağ yapım türleri"""
    STRONG = "transport-strong"
    WEAK = "transport-weak"
    SOURCE = "transport-source"
    CONSERVATIVE = "transport-conservative"
    DAMPED = "transport-damped"


class ApproxCertificate(BaseModel):
    """Düzgün fonksiyon yaklaşım sertifikası"""
    name: str = "target"
    epsilon: float = Field(..., gt=0.0, lt=1.0)
    grid_n: int = Field(..., ge=1)
    taylor_order: int = Field(..., ge=0)
    requested_order: int = Field(..., ge=0)
    mul_budget: float = Field(..., ge=0.0)
    size: SizeReport
    measured_error: Optional[float] = None
    validation_points: int = 0
    active_axes: List[int] = []
    remainder_constant: float = 0.0
    refinements: int = 0
    estimated: bool = True
    warnings: List[str] = []


class RiemannNetCertificate(BaseModel):
    """Riemann toplamı ağı sertifikası"""
    N: int = Field(..., ge=1)
    a_bar: float = Field(..., ge=0.0)
    c3: float = Field(..., ge=0.0)
    T: float = Field(..., gt=0.0)

    @model_validator(mode="after")
    def check_c3(self):
        if abs(self.c3 - 3.0 * self.a_bar) > 1e-12 * max(1.0, self.a_bar):
            raise ValueError("c3 = 3 * a_bar olmalı")
        return self


class BuildCertificate(BaseModel):
    """Taşıma çözümü ağı sertifikası"""
    construction_id: ConstructionId
    epsilon: float = Field(..., gt=0.0, lt=1.0)
    deltas: Dict[str, float] = {}
    N: Optional[int] = None
    domain: Dict[str, Any] = {}
    sub_sizes: Dict[str, SizeReport] = {}
    total: SizeReport
    constants_used: Dict[str, float] = {}
    estimated: List[str] = []
    bound_source: str = "estimated"
    ledger: Dict[str, float] = {}
    ledger_sum: float = 0.0
    mul_c2: Optional[float] = None
    measured_sup_error: Optional[float] = None
    validation_points: int = 0
    passed: Optional[bool] = None
    warnings: List[str] = []

    @model_validator(mode="after")
    def check_total(self):
        for key, sub in self.sub_sizes.items():
            if sub.weights > self.total.weights:
                raise ValueError(f"Alt ağ '{key}' toplamdan büyük olamaz")
        return self

    def ledger_within_budget(self) -> bool:
        """Hata defteri toplamı epsilon içinde mi"""
        return self.ledger_sum <= self.epsilon * (1.0 + 1e-12)
