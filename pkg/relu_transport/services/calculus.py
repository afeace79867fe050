"""
relu-transport - Network Calculus
Kesin birleştirme işlemleri (ardışık bağlama, paralelleştirme, toplam) ve çarpma aygıtı
"""

from typing import Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np

from ..core.errors import CompositionError, ContractError
from ..models.network_models import MulConfig
from .graph_builder import Affine, NetworkBuilder, affine_sum
from .network import AffineMap, Network

logger = logging.getLogger(__name__)

# Kare aygıtında seviye başına ağırlık (3 ReLU satırı + çıkış terimleri)
WEIGHTS_PER_LEVEL = 14
# Üç kare aygıtı, seviye sayısı log₂ ölçeğinde
GADGET_C1 = 3 * WEIGHTS_PER_LEVEL / math.log(2.0)


def _layer_triplets(layer: AffineMap) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return layer.row_idx, layer.col_idx, layer.values


def parallelize(phis: Sequence[Network]) -> Network:
    """P(Φ¹,…,Φⁿ): ortak giriş, çıkışlar sırayla birleştirilir"""
    phis = list(phis)
    if not phis:
        raise ContractError("Paralelleştirme için boş ağ listesi")
    d = phis[0].input_dim
    for phi in phis:
        if phi.input_dim != d:
            raise CompositionError(f"Giriş boyutları farklı: {phi.input_dim} != {d}")
    if len(phis) == 1:
        return phis[0]

    L = max(phi.depth for phi in phis)
    hidden = [sum(phi.layers[ell - 1].rows for phi in phis if phi.depth - 1 >= ell) for ell in range(1, L)]
    widths = [d] + hidden
    block_start = np.concatenate([[0], np.cumsum(widths)])

    cursor = [0] * L
    colmaps, row_starts = [], []
    for phi in phis:
        cm = np.empty(d + sum(phi.hidden_widths), dtype=np.int64)
        cm[:d] = np.arange(d)
        starts = {}
        src = d
        for ell in range(1, phi.depth):
            n = phi.layers[ell - 1].rows
            cm[src:src + n] = block_start[ell] + cursor[ell] + np.arange(n)
            starts[ell] = cursor[ell]
            cursor[ell] += n
            src += n
        colmaps.append(cm)
        row_starts.append(starts)

    layers = []
    for ell in range(1, L):
        r_parts, c_parts, v_parts, b_parts = [], [], [], []
        for phi, cm, starts in zip(phis, colmaps, row_starts):
            if phi.depth - 1 < ell:
                continue
            layer = phi.layers[ell - 1]
            r, c, v = _layer_triplets(layer)
            r_parts.append(r + starts[ell])
            c_parts.append(cm[c])
            v_parts.append(v)
            b_parts.append(layer.bias)
        layers.append(AffineMap(hidden[ell - 1], widths[:ell],
                                np.concatenate(r_parts), np.concatenate(c_parts),
                                np.concatenate(v_parts), np.concatenate(b_parts)))

    r_parts, c_parts, v_parts, b_parts = [], [], [], []
    out = 0
    for phi, cm in zip(phis, colmaps):
        last = phi.layers[-1]
        r, c, v = _layer_triplets(last)
        r_parts.append(r + out)
        c_parts.append(cm[c])
        v_parts.append(v)
        b_parts.append(last.bias)
        out += last.rows
    layers.append(AffineMap(out, widths, np.concatenate(r_parts), np.concatenate(c_parts),
                            np.concatenate(v_parts), np.concatenate(b_parts)))
    return Network(d, layers)


def sparse_concat(phi1: Network, phi2: Network) -> Network:
    """Φ¹ ⊙ Φ²: ara katman [A; −A] ile ϱ(y) − ϱ(−y) = y"""
    if phi1.input_dim != phi2.output_dim:
        raise CompositionError(
            f"Φ¹ giriş boyutu {phi1.input_dim}, Φ² çıkış boyutu {phi2.output_dim}"
        )
    m = phi2.output_dim
    layers = list(phi2.layers[:-1])

    last2 = phi2.layers[-1]
    r, c, v = _layer_triplets(last2)
    layers.append(AffineMap(2 * m, last2.widths,
                            np.concatenate([r, r + m]), np.concatenate([c, c]),
                            np.concatenate([v, -v]), np.concatenate([last2.bias, -last2.bias])))

    prefix = list(last2.widths) + [2 * m]
    base = sum(last2.widths)
    after = base + 2 * m
    for ell, layer in enumerate(phi1.layers):
        r, c, v = _layer_triplets(layer)
        is_input = c < m
        ri, ci, vi = r[is_input], c[is_input], v[is_input]
        rows = np.concatenate([ri, ri, r[~is_input]])
        cols = np.concatenate([base + ci, base + m + ci, after + (c[~is_input] - m)])
        vals = np.concatenate([vi, -vi, v[~is_input]])
        widths = prefix + phi1.hidden_widths[:ell]
        layers.append(AffineMap(layer.rows, widths, rows, cols, vals, layer.bias))
    return Network(phi2.input_dim, layers)


def sum_nets(phi1: Network, phi2: Network) -> Network:
    """Φ¹ ⊕ Φ²: paralelleştir, son katmanı [1 1] ile birleştir"""
    if phi1.output_dim != 1 or phi2.output_dim != 1:
        raise ContractError("Toplam için iki ağın da çıkış boyutu 1 olmalı")
    par = parallelize([phi1, phi2])
    last = par.layers[-1]
    r, c, v = _layer_triplets(last)
    merged = AffineMap(1, last.widths, np.zeros_like(r), c, v, [last.bias.sum()])
    return Network(par.input_dim, list(par.layers[:-1]) + [merged])


def scale_output(net: Network, factor: float) -> Network:
    """Çıkışı sabitle çarp (son katmana katlanır, ek ağırlık yok)"""
    last = net.layers[-1]
    scaled = AffineMap(last.rows, last.widths, last.row_idx, last.col_idx,
                       last.values * factor, last.bias * factor)
    return Network(net.input_dim, list(net.layers[:-1]) + [scaled])


def const_shift_net(input_dim: int, row_matrix, bias) -> Network:
    """Tek katmanlı afin ağ x ↦ A x + b"""
    A = np.atleast_2d(np.asarray(row_matrix, dtype=np.float64))
    b = np.asarray(bias, dtype=np.float64).ravel()
    if A.shape[1] != input_dim:
        raise ContractError(f"Matris sütunları {A.shape[1]}, input_dim {input_dim}")
    if len(b) != A.shape[0]:
        raise ContractError("Bias uzunluğu matris satırlarıyla uyuşmuyor")
    r, c = np.nonzero(A)
    return Network(input_dim, [AffineMap(A.shape[0], [input_dim], r, c, A[r, c], b)])


def selector_net(input_dim: int, index_range: Union[range, Sequence[int]]) -> Network:
    """Koordinat seçici; W = seçilen koordinat sayısı"""
    indices = list(index_range)
    if not indices:
        raise ContractError("Boş seçim")
    if any(i < 0 or i >= input_dim for i in indices):
        raise ContractError(f"Seçim aralığı input_dim={input_dim} dışında: {indices}")
    rows = np.arange(len(indices))
    return Network(input_dim, [AffineMap(len(indices), [input_dim], rows, indices, np.ones(len(indices)))])


def identity_net(input_dim: int) -> Network:
    return selector_net(input_dim, range(input_dim))


def duplication_net(n: int, D: int) -> Network:
    """(t, x, η) ↦ (t, t, x, η)"""
    d = 1 + n + D
    return selector_net(d, [0] + list(range(d)))


def gadget_levels(epsilon: float, bound_M: float) -> int:
    """Sawtooth seviye sayısı m = max(1, ⌈log₂(12M²/ε)⌉)"""
    ratio = 12.0 * bound_M * bound_M / epsilon
    if ratio <= 2.0:
        return 1
    return int(math.ceil(math.log2(ratio) - 1e-12))


def emit_square(builder: NetworkBuilder, z: Affine, m: int) -> Affine:
    """[0,1] üzerinde z² yaklaşımı; hata ≤ 4^(−m−1)"""
    result = z
    cur = z
    for s in range(1, m + 1):
        h0 = builder.relu(cur)
        h1 = builder.relu(cur - 0.5)
        h2 = builder.relu(cur - 1.0)
        g = affine_sum([h0, h1, h2], [2.0, -4.0, 2.0])
        result = result - g * (0.25 ** s)
        cur = g
    return result


def product_error_bound(levels: int, bound_M: float) -> float:
    """m seviyeli aygıtın garanti hatası 1.5·M²·4^(−m)"""
    return 1.5 * bound_M * bound_M * 0.25 ** levels


def levels_for_error(error: float, bound_M: float) -> int:
    """Hata ≤ error için en az seviye"""
    ratio = 1.5 * bound_M * bound_M / error
    if ratio <= 4.0:
        return 1
    return int(math.ceil(math.log(ratio, 4.0) - 1e-12))


def emit_product(builder: NetworkBuilder, a: Affine, b: Affine, bound_M: float,
                 epsilon: Optional[float] = None, levels: Optional[int] = None) -> Affine:
    """|a|,|b| ≤ M için ab yaklaşımı; ×(0, b) = 0"""
    m = levels if levels is not None else gadget_levels(epsilon, bound_M)
    scale = 1.0 / (2.0 * bound_M)
    pa, na = builder.split(a)
    pb, nb = builder.split(b)
    if len(a.terms) + len(b.terms) <= 4:
        ps, ns = builder.split(a + b)
    else:
        ps, ns = builder.split(affine_sum([pa, na, pb, nb], [1.0, -1.0, 1.0, -1.0]))
    sq_s = emit_square(builder, (ps + ns) * scale, m)
    sq_a = emit_square(builder, (pa + na) * scale, m)
    sq_b = emit_square(builder, (pb + nb) * scale, m)
    return affine_sum([sq_s, sq_a, sq_b], [1.0, -1.0, -1.0]) * (2.0 * bound_M * bound_M)


def mul_gadget_net(cfg: MulConfig) -> Network:
    """İki girişli çarpma ağı ×^{ε,M}"""
    builder = NetworkBuilder(2)
    x, y = builder.inputs()
    return builder.build([emit_product(builder, x, y, cfg.bound_M, cfg.epsilon)])


def input_weights(net: Network) -> int:
    """Ağ girişlerini okuyan ağırlıklar; ⊙ içinde dış ağın bu ağırlıkları ikiye katlanır"""
    return sum(int(np.count_nonzero(layer.col_idx < net.input_dim)) for layer in net.layers)


def concat_weights(phi1: Network, phi2: Network) -> int:
    """W(Φ¹ ⊙ Φ²) = W(Φ¹) + W_giriş(Φ¹) + W(Φ²) + W_son(Φ²), kurmadan"""
    return phi1.weights + input_weights(phi1) + phi2.weights + phi2.layers[-1].weights


def gadget_constant_c2(cfg: MulConfig) -> float:
    """⊗ içindeki aygıt payı: c₂ = W(×) + W_giriş(×) − c₁ ln(1/ε)

    W(Φ¹ ⊗ Φ²) ≤ c₁ ln(1/ε) + c₂ + 2W(Φ¹) + 2W(Φ²) bu c₂ ile kesin olarak sağlanır.
    """
    gadget = mul_gadget_net(cfg)
    return gadget.weights + input_weights(gadget) - GADGET_C1 * math.log(1.0 / cfg.epsilon)


def product_weight_bound(phi1: Network, phi2: Network, cfg: MulConfig) -> float:
    """Sertifikadaki c₂ ile W(Φ¹ ⊗ Φ²) üst sınırı"""
    return GADGET_C1 * math.log(1.0 / cfg.epsilon) + gadget_constant_c2(cfg) + 2 * phi1.weights + 2 * phi2.weights


def multiply_nets(phi1: Network, phi2: Network, cfg: MulConfig) -> Network:
    """Φ¹ ⊗^ε Φ² = × ⊙ P(Φ¹, Φ²)"""
    if phi1.output_dim != 1 or phi2.output_dim != 1:
        raise ContractError("Çarpma için iki ağın da çıkış boyutu 1 olmalı")
    if phi1.input_dim != phi2.input_dim:
        raise CompositionError("Çarpanların giriş boyutları farklı")
    product = sparse_concat(mul_gadget_net(cfg), parallelize([phi1, phi2]))
    logger.debug(f"Çarpım ağı: ε={cfg.epsilon}, M={cfg.bound_M}, W={product.weights}")
    return product


