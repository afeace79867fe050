from pydantic import BaseModel, Field


class SizeReport(BaseModel):
    """Ağ boyut raporu"""
    layers: int = Field(..., ge=0)
    weights: int = Field(..., ge=0)
    neurons: int = Field(..., ge=0)


class MulConfig(BaseModel):
    """Çarpma aygıtı ayarları"""
    epsilon: float = Field(..., gt=0.0, lt=1.0)
    bound_M: float = Field(..., gt=0.0)
