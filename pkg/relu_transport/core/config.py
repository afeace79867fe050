from pydantic_settings import BaseSettings
from typing import Literal


class Settings(BaseSettings):
    """Uygulama ayarları"""

    # General
    app_name: str = "relu-transport"
    version: str = "1.0.0"
    log_level: str = "INFO"

    # Paralellik
    threads: int = 1  # RELU_TRANSPORT_THREADS
    eval_chunk_bytes: int = 67108864  # 64MB

    # ODE integrator
    ode_atol: float = 1e-10
    ode_rtol: float = 1e-8
    ode_max_steps: int = 20000
    ode_min_step: float = 1e-12
    flow_batch_points: int = 262144

    # Smooth approximation
    fd_max_taylor_order: int = 2
    oracle_max_taylor_order: int = 6
    derivative_samples: int = 64
    safety_factor: float = 1.5
    max_grid_nodes: int = 20000
    max_refinements: int = 3
    validation_max_points: int = 40000
    validation_qmc_log2: int = 17

    # Metadata estimation
    lipschitz_samples: int = 10000

    # Builders
    bound_source: Literal["estimated", "proof"] = "estimated"
    lattice_t: int = 41
    lattice_x: int = 41
    lattice_eta: int = 9
    lattice_cap: int = 100000
    seed: int = 0

    class Config:
        env_prefix = "RELU_TRANSPORT_"
        env_file = ".env"
        case_sensitive = False


# Global settings instance
settings = Settings()
