"""
relu-transport - Derivatives
Birim küpte karışık kısmi türevler: analitik kahin ya da tek yığında merkezi farklar
"""

from itertools import product
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.special import comb

from ..core.config import settings, Settings
from ..models.problem_models import SmoothTarget
from .estimates import sample_box

logger = logging.getLogger(__name__)

Alpha = Tuple[int, ...]


def fd_step(order: int, noise: float) -> float:
    """Kesme ve yuvarlama hatasını dengeleyen adım h = noise^{1/(j+2)}"""
    return noise ** (1.0 / (order + 2))


def central_stencil(alpha: Alpha, h: float) -> List[Tuple[np.ndarray, float]]:
    """∂^α için tensör merkezi fark şablonu: (öteleme, ağırlık) çiftleri"""
    axes = [i for i, a in enumerate(alpha) if a]
    per_axis = [[((alpha[i] / 2.0 - j) * h, (-1.0) ** j * comb(alpha[i], j, exact=True))
                 for j in range(alpha[i] + 1)] for i in axes]
    scale = h ** sum(alpha)
    stencil = []
    for combo in product(*per_axis):
        offset = np.zeros(len(alpha))
        weight = 1.0
        for axis, (shift, w) in zip(axes, combo):
            offset[axis] = shift
            weight *= w
        stencil.append((offset, weight / scale))
    return stencil


class DerivativeProbe:
    """f̃(y) = f(lo + y·(hi − lo)) ve ∂^α f̃ değerleri"""

    def __init__(self, target: SmoothTarget, config: Optional[Settings] = None):
        self.target = target
        self.config = config or settings
        self.lo = np.asarray(target.lo, dtype=np.float64)
        self.scale = np.asarray(target.hi, dtype=np.float64) - self.lo
        self.has_oracle = target.derivative_oracle is not None

    @property
    def dim(self) -> int:
        return self.target.dim

    def to_original(self, Y: np.ndarray) -> np.ndarray:
        return self.lo + np.asarray(Y, dtype=np.float64) * self.scale

    def values(self, Y: np.ndarray) -> np.ndarray:
        """f̃(Y), Y (P, d) birim koordinatlarda"""
        out = self.target.evaluator(self.to_original(Y))
        return np.asarray(out, dtype=np.float64).reshape(-1)

    def unit_factor(self, alpha: Sequence[int]) -> float:
        """∂_y^α = Π (hi − lo)^{α_i} ∂_x^α"""
        return float(np.prod(self.scale ** np.asarray(alpha, dtype=np.float64)))

    def derivatives(self, alphas: Sequence[Alpha], Y: np.ndarray) -> np.ndarray:
        """(len(alphas), P) birim koordinat türevleri"""
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if not alphas:
            return np.zeros((0, Y.shape[0]))
        if self.has_oracle:
            X = self.to_original(Y)
            return np.stack([
                self.unit_factor(alpha) * np.asarray(self.target.derivative_oracle(alpha, X), dtype=np.float64).reshape(-1)
                for alpha in alphas
            ])
        return self._finite_differences(alphas, Y)

    def _finite_differences(self, alphas: Sequence[Alpha], Y: np.ndarray) -> np.ndarray:
        """Tüm şablon noktaları tek değerlendirici çağrısında"""
        noise = max(self.target.noise_level, np.finfo(np.float64).eps)
        points = Y.shape[0]
        blocks, plans = [], []
        for alpha in alphas:
            order = sum(alpha)
            if order == 0:
                blocks.append(Y)
                plans.append([1.0])
                continue
            h = fd_step(order, noise)
            half = np.asarray(alpha, dtype=np.float64) * h / 2.0
            centre = np.clip(Y, half, 1.0 - half)
            weights = []
            for offset, weight in central_stencil(alpha, h):
                blocks.append(centre + offset)
                weights.append(weight)
            plans.append(weights)

        try:
            values = self.values(np.vstack(blocks))
        except Exception as e:
            logger.error(f"Türev şablonu değerlendirilemedi: {e}")
            raise

        out = np.zeros((len(alphas), points))
        cursor = 0
        for row, weights in enumerate(plans):
            for weight in weights:
                out[row] += weight * values[cursor:cursor + points]
                cursor += points
        return out

    def sample_points(self, count: int, seed: int) -> np.ndarray:
        """Birim küpte Sobol noktaları ve merkez"""
        Y = sample_box(np.zeros(self.dim), np.ones(self.dim), count, seed)
        return np.vstack([Y, np.full((1, self.dim), 0.5)])

    def sampled_sups(self, alphas: Sequence[Alpha], Y: np.ndarray) -> np.ndarray:
        """Her α için örneklenen sup |∂^α f̃|"""
        if not alphas:
            return np.zeros(0)
        return np.max(np.abs(self.derivatives(alphas, Y)), axis=1)

    def original_sup(self, alphas: Sequence[Alpha], unit_sups: np.ndarray) -> float:
        """Birim türev suplarını özgün koordinatlara çevirip en büyüğünü döndür"""
        if not len(alphas):
            return 0.0
        return max(float(s) / self.unit_factor(alpha) for alpha, s in zip(alphas, unit_sups))


def alpha_factorial(alpha: Sequence[int]) -> float:
    """α! = Π α_i!"""
    return float(np.prod([math.factorial(a) for a in alpha]))
