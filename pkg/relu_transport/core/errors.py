"""
relu-transport - Hata sınıfları
"""

from typing import Optional

import numpy as np


class ReluTransportError(Exception):
    """Tüm paket hatalarının tabanı"""


class InputShapeError(ReluTransportError, ValueError):
    """Giriş boyutu ağın input_dim değeriyle uyuşmuyor"""


class CompositionError(ReluTransportError, ValueError):
    """Ağ birleştirmede boyut uyuşmazlığı"""


class ContractError(ReluTransportError, ValueError):
    """Ön koşul ihlali (çıkış boyutu, indeks aralığı, genlik)"""


class ConfigError(ReluTransportError, ValueError):
    """Geçersiz yapılandırma değeri"""


class CapabilityError(ReluTransportError):
    """İstenen işlem için gerekli alan veya düzenlilik yok"""


class BudgetExceededError(ReluTransportError):
    """Izgara ya da tolerans defteri izin verilen sınırı aşıyor"""


class StiffnessError(ReluTransportError, RuntimeError):
    """ODE adım boyu alt sınırın altına düştü"""

    def __init__(self, message: str, last_state: Optional[np.ndarray] = None, sigma: float = 0.0):
        super().__init__(message)
        self.last_state = last_state
        self.sigma = sigma


class NetworkParseError(ReluTransportError, ValueError):
    """Serileştirilmiş ağ okunamadı"""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class CertificationError(ReluTransportError):
    """Ölçülen hata hedef toleransı aşıyor"""

    def __init__(self, message: str, measured: float, target: float):
        super().__init__(message)
        self.measured = measured
        self.target = target
