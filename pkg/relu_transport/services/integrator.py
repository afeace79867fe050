"""
relu-transport - ODE Integrator
Yığın halinde gömülü Runge-Kutta 5(4) (Cash-Karp) integratörü
"""

from typing import Callable, Optional
import logging

import numpy as np

from ..core.config import settings, Settings
from ..core.errors import StiffnessError

logger = logging.getLogger(__name__)

# Cash-Karp Butcher tablosu
STAGES = [0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8]
BT = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [3 / 10, -9 / 10, 6 / 5],
    [-11 / 54, 5 / 2, -70 / 27, 35 / 27],
    [1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096],
]
B5 = [37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771]
# 5. ve 4. mertebe ağırlık farkı (yerel hata tahmini)
TR = [-277 / 64512, 0.0, 6925 / 370944, -6925 / 202752, -277 / 14336, 277 / 7084]

# Sağ taraf: (τ, y, η) -> dy/dτ, hepsi yığın halinde
RHS = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class CashKarpIntegrator:
    """σ ∈ [0,1] parametrizasyonlu uyarlamalı RK45; yığındaki tüm noktalar aynı adım dizisini paylaşır"""

    def __init__(self, config: Optional[Settings] = None, initial_step: float = 0.1):
        self.config = config or settings
        self.initial_step = initial_step

    def integrate(self, rhs: RHS, y0: np.ndarray, s: np.ndarray, t: np.ndarray,
                  eta: np.ndarray) -> np.ndarray:
        """y(t) = y0 durumundan τ = s anına integrasyon"""
        cfg = self.config
        y = np.array(y0, dtype=np.float64, copy=True)
        points = y.shape[0]
        s = np.broadcast_to(np.asarray(s, dtype=np.float64), (points,))
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), (points,))
        span = (s - t)[:, None]
        if points == 0 or not np.any(span):
            return y

        def f(sigma: float, state: np.ndarray) -> np.ndarray:
            tau = t + sigma * (s - t)
            return span * rhs(tau, state, eta)

        sigma = 0.0
        h = self.initial_step
        steps = 0
        k = [None] * 6
        while sigma < 1.0:
            if steps >= cfg.ode_max_steps:
                logger.error(f"ODE adım sınırı aşıldı: σ={sigma:.6g}")
                raise StiffnessError(f"Adım sayısı {cfg.ode_max_steps} aşıldı", last_state=y, sigma=sigma)
            h = min(h, 1.0 - sigma)
            for i in range(6):
                stage = y
                for j, a in enumerate(BT[i]):
                    if a != 0.0:
                        stage = stage + (h * a) * k[j]
                k[i] = f(sigma + STAGES[i] * h, stage)
            y_new = y + h * sum(b * ki for b, ki in zip(B5, k) if b != 0.0)
            err_vec = h * sum(c * ki for c, ki in zip(TR, k) if c != 0.0)
            scale = cfg.ode_atol + cfg.ode_rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / scale))
            steps += 1

            if err <= 1.0:
                y = y_new
                sigma = 1.0 if sigma + h >= 1.0 - 1e-15 else sigma + h
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h *= factor
            if sigma < 1.0 and h < cfg.ode_min_step:
                logger.error(f"ODE adım boyu alt sınırın altında: h={h:.3g}, σ={sigma:.6g}")
                raise StiffnessError(f"Adım boyu {h:.3g} < {cfg.ode_min_step}", last_state=y, sigma=sigma)
        return y
