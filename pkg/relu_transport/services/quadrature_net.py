"""
relu-transport - Quadrature Networks
İlk argümanda sol Riemann toplamını taklit eden ağ Ĩ_N(Φ) ve sayısal kahinler
"""

from typing import Callable, Literal, Optional, Tuple
import logging

import numpy as np
from scipy import integrate

from ..core.errors import ContractError
from ..models.certificate_models import RiemannNetCertificate
from .calculus import parallelize, sparse_concat
from .graph_builder import NetworkBuilder
from .network import AffineMap, Network

logger = logging.getLogger(__name__)


def _node(i: int, N: int, T: float) -> float:
    return i * T / N


def _check_index(i: int, N: int) -> None:
    if N < 1:
        raise ContractError(f"N ≥ 1 olmalı: {N}")
    if not 0 <= i <= N - 1:
        raise ContractError(f"İndeks aralık dışında: i={i}, N={N}")


def indicator_net(i: int, N: int, T: float, input_dim: int) -> Network:
    """(N/T)(ϱ(t − t_i) − ϱ(t − t_{i+1})): t ≤ t_i için 0, t ≥ t_{i+1} için 1"""
    _check_index(i, N)
    builder = NetworkBuilder(input_dim)
    h = builder.relu(builder.input(0))
    low = builder.relu(h - _node(i, N, T))
    high = builder.relu(h - _node(i + 1, N, T))
    return builder.build([(low - high) * (N / T)])


def shift_net(phi: Network, i: int, N: int, T: float) -> Network:
    """Zaman girişini t_i'de dondur: Φ ⊙ Ψ_i, L = L(Φ) + 2"""
    _check_index(i, N)
    d = phi.input_dim
    inert = AffineMap(1, [d])
    rows = np.arange(1, d)
    freeze = AffineMap(d, [d, 1], rows, rows, np.ones(d - 1), np.concatenate([[_node(i, N, T)], np.zeros(d - 1)]))
    return sparse_concat(phi, Network(d, [inert, freeze]))


def _clip_layers(a_bar: float) -> Network:
    """(ind, shift) ↦ ϱ(2ā·ind + shift − ā) − ϱ(2ā·ind − ā)"""
    hidden = AffineMap(2, [2], [0, 0, 1], [0, 1, 0], [2.0 * a_bar, 1.0, 2.0 * a_bar], [-a_bar, -a_bar])
    out = AffineMap(1, [2, 2], [0, 0], [2, 3], [1.0, -1.0])
    return Network(2, [hidden, out])


def clip_net(phi: Network, i: int, N: int, T: float, a_bar: float) -> Network:
    """t ≤ t_i: 0; t ≥ t_{i+1}: R(Φ)(t_i, x); arada |·| ≤ 2ā"""
    if phi.output_dim != 1:
        raise ContractError("clip_net için Φ skaler çıkışlı olmalı")
    if a_bar < 0.0 or (a_bar == 0.0 and phi.weights > 0):
        raise ContractError(f"ā pozitif olmalı: {a_bar}")
    ind = indicator_net(i, N, T, phi.input_dim)
    shifted = shift_net(phi, i, N, T)
    return sparse_concat(_clip_layers(a_bar), parallelize([ind, shifted]))


def riemann_net(phi: Network, N: int, T: float, a_bar: float) -> Tuple[Network, RiemannNetCertificate]:
    """Ĩ_N(Φ) = (1/N) Σ_i clip_i; |Ĩ_N − I_N| ≤ 3ā/N"""
    if N < 1:
        raise ContractError(f"N ≥ 1 olmalı: {N}")
    par = parallelize([clip_net(phi, i, N, T, a_bar) for i in range(N)])
    last = par.layers[-1]
    merged = AffineMap(1, last.widths, np.zeros_like(last.row_idx), last.col_idx,
                       last.values / N, [last.bias.sum() / N])
    net = Network(par.input_dim, list(par.layers[:-1]) + [merged])
    certificate = RiemannNetCertificate(N=N, a_bar=a_bar, c3=3.0 * a_bar, T=T)
    logger.info(f"Riemann ağı: N={N}, ā={a_bar:.4g}, L={net.depth}, W={net.weights}")
    return net, certificate


def left_riemann(f: Callable, N: int, T: float, t, x=None,
                 weighting: Literal["step", "unit"] = "step") -> np.ndarray:
    """Σ_{t_i < t} w·f(t_i, x); step: w = T/N, unit: w = 1/N"""
    if N < 1:
        raise ContractError(f"N ≥ 1 olmalı: {N}")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    points = t.shape[0]
    if x is not None:
        x = np.asarray(x, dtype=np.float64).reshape(points, -1)
    weight = T / N if weighting == "step" else 1.0 / N
    total = np.zeros(points)
    for i in range(N):
        ti = _node(i, N, T)
        mask = ti < t
        if not np.any(mask):
            continue
        values = np.asarray(f(np.full(points, ti), x), dtype=np.float64).reshape(-1)
        total += np.where(mask, values, 0.0)
    total *= weight
    return total[0] if scalar else total


def integral_oracle(f: Callable, t, x=None) -> np.ndarray:
    """∫₀ᵗ f(τ, x) dτ, uyarlamalı Gauss–Kronrod"""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if x is not None:
        x = np.asarray(x, dtype=np.float64).reshape(t.shape[0], -1)
    out = np.empty(t.shape[0])
    for p in range(t.shape[0]):
        xp = None if x is None else x[p:p + 1]
        out[p], _ = integrate.quad(lambda tau: float(np.asarray(f(np.array([tau]), xp)).reshape(-1)[0]),
                                   0.0, t[p], epsabs=1e-12, epsrel=1e-12)
    return out[0] if scalar else out
