"""
relu-transport - Estimates
Akış büyüme sınırları (G0, G1, Gk), Hadamard J sınırı ve örneklemeli Lipschitz/sup tahmini
"""

from typing import Callable, Dict, Optional, Sequence
import logging
import math

import numpy as np
from scipy.stats import qmc

from ..core.config import settings, Settings
from ..core.errors import CapabilityError
from ..models.problem_models import VectorFieldProblem
from ..utils.helpers import multi_indices

logger = logging.getLogger(__name__)


def _exp(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def sample_box(lo: Sequence[float], hi: Sequence[float], samples: int, seed: int = 0) -> np.ndarray:
    """Kutuda karıştırılmış Sobol noktaları (2'nin kuvvetine yuvarlanır)"""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    m = max(1, int(math.ceil(math.log2(max(samples, 2)))))
    sobol = qmc.Sobol(d=len(lo), scramble=True, seed=seed)
    return lo + sobol.random_base2(m) * (hi - lo)


def initial_growth_bound(K_radius: float, growth_C: float, T: float) -> float:
    """G0 = (|K| + C T) e^{C T}"""
    return (K_radius + growth_C * T) * _exp(growth_C * T)


def ck_bound(problem: VectorFieldProblem, k: int) -> Dict[str, float]:
    """Akış için {G0, G1, Gk}; T ve ‖V‖ normları 1'e yukarı kırpılır (G0 hariç)"""
    if k < 1:
        raise CapabilityError("ck_bound için k ≥ 1 gerekli")
    missing = [j for j in range(1, k + 1) if j not in problem.ck_norms]
    if missing:
        raise CapabilityError(f"ck_norms eksik mertebeler: {missing}")
    G0 = initial_growth_bound(problem.K_radius, problem.growth_C, problem.T)
    T = max(problem.T, 1.0)
    V1 = max(problem.ck_norms[1], 1.0)
    G1 = max(G0, V1 * _exp(T * V1))
    if k == 1:
        Gk = G1
    else:
        Vk = max(problem.ck_norms[k], 1.0)
        Gk = max(G0, 2.0 ** k * T ** (k - 1) * Vk ** (2 * k - 1) * _exp((2 * k - 1) * T * V1))
    return {"G0": G0, "G1": G1, "Gk": Gk}


def hadamard_bound(n: int, G1: float) -> float:
    """G_J = n^{n/2} G1^n"""
    return n ** (n / 2.0) * G1 ** n


def hadamard_J_bound(problem: VectorFieldProblem) -> float:
    """G1' = G0 + 3‖V‖_{C¹} e^{T‖V‖_{C¹}} ile Hadamard sınırı"""
    if 1 not in problem.ck_norms:
        raise CapabilityError("hadamard_J_bound için ‖V‖_{C¹} gerekli")
    G0 = initial_growth_bound(problem.K_radius, problem.growth_C, problem.T)
    T = max(problem.T, 1.0)
    V1 = max(problem.ck_norms[1], 1.0)
    return hadamard_bound(problem.n, G0 + 3.0 * V1 * _exp(T * V1))


def estimate_lipschitz(fn: Callable[[np.ndarray], np.ndarray], lo: Sequence[float], hi: Sequence[float],
                       config: Optional[Settings] = None, seed: Optional[int] = None) -> float:
    """En büyük merkezi fark eğimi × güvenlik çarpanı"""
    cfg = config or settings
    X = sample_box(lo, hi, cfg.lipschitz_samples, cfg.seed if seed is None else seed)
    dim = X.shape[1]
    width = np.maximum(np.asarray(hi, dtype=np.float64) - np.asarray(lo, dtype=np.float64), 1.0)
    grad = np.empty((X.shape[0], dim))
    for i in range(dim):
        h = 1e-6 * width[i]
        step = np.zeros(dim)
        step[i] = h
        grad[:, i] = (fn(X + step) - fn(X - step)) / (2.0 * h)
    return cfg.safety_factor * float(np.max(np.linalg.norm(grad, axis=1)))


def estimate_sup(fn: Callable[[np.ndarray], np.ndarray], lo: Sequence[float], hi: Sequence[float],
                 config: Optional[Settings] = None, seed: Optional[int] = None) -> float:
    """Örneklenen en büyük |f| × güvenlik çarpanı"""
    cfg = config or settings
    X = sample_box(lo, hi, cfg.lipschitz_samples, cfg.seed if seed is None else seed)
    return cfg.safety_factor * float(np.max(np.abs(fn(X))))


def symbolic_norms(funcs, lo: Sequence[float], hi: Sequence[float], k: int, seed: int = 0,
                   samples: int = 2048, safety: float = 1.5) -> Dict[int, float]:
    """Sembolik türevlerden {j: max_{|α|≤j} sup|∂^α f|} tahmini"""
    X = sample_box(lo, hi, samples, seed)
    corners = np.asarray(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(len(lo), -1).T
    X = np.vstack([X, corners]) if len(lo) <= 10 else X
    norms: Dict[int, float] = {}
    running = 0.0
    for j in range(k + 1):
        for alpha in multi_indices(len(lo), j):
            for fn in funcs:
                running = max(running, safety * float(np.max(np.abs(fn.derivative(alpha, X)))))
        norms[j] = running
    return norms
