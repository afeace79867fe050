# Core modules
from .config import settings, Settings
from .errors import (
    ReluTransportError, InputShapeError, CompositionError, ContractError,
    ConfigError, CapabilityError, BudgetExceededError, StiffnessError,
    NetworkParseError, CertificationError,
)

__all__ = [
    "settings", "Settings",
    "ReluTransportError", "InputShapeError", "CompositionError", "ContractError",
    "ConfigError", "CapabilityError", "BudgetExceededError", "StiffnessError",
    "NetworkParseError", "CertificationError",
]
