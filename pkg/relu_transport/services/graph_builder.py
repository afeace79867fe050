"""
relu-transport - Graph Builder
Afin ifadelerden nöron nöron ağ kurma (katman yerleşimi otomatik)
"""

from typing import Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from ..core.errors import ContractError
from .network import AffineMap, Network

logger = logging.getLogger(__name__)

Number = Union[int, float]


class Affine:
    """Serbest afin ifade: Σ w_j · node_j + const"""

    __slots__ = ("terms", "const", "depth")

    def __init__(self, terms: Optional[Dict[int, float]] = None, const: float = 0.0, depth: int = 0):
        self.terms: Dict[int, float] = terms if terms is not None else {}
        self.const = float(const)
        self.depth = depth

    @staticmethod
    def _coerce(other) -> "Affine":
        if isinstance(other, Affine):
            return other
        return Affine({}, float(other), 0)

    def _combine(self, other: "Affine", sign: float) -> "Affine":
        terms = dict(self.terms)
        for node, coef in other.terms.items():
            value = terms.get(node, 0.0) + sign * coef
            if value == 0.0:
                terms.pop(node, None)
            else:
                terms[node] = value
        return Affine(terms, self.const + sign * other.const, max(self.depth, other.depth))

    def __add__(self, other) -> "Affine":
        return self._combine(self._coerce(other), 1.0)

    __radd__ = __add__

    def __sub__(self, other) -> "Affine":
        return self._combine(self._coerce(other), -1.0)

    def __rsub__(self, other) -> "Affine":
        return self._coerce(other)._combine(self, -1.0)

    def __neg__(self) -> "Affine":
        return self * -1.0

    def __mul__(self, scalar: Number) -> "Affine":
        scalar = float(scalar)
        if scalar == 0.0:
            return Affine({}, 0.0, 0)
        return Affine({k: v * scalar for k, v in self.terms.items()}, self.const * scalar, self.depth)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Number) -> "Affine":
        return self * (1.0 / float(scalar))

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def __repr__(self) -> str:
        return f"Affine(terms={len(self.terms)}, const={self.const}, depth={self.depth})"


def affine_sum(exprs: Sequence[Affine], coefs: Optional[Sequence[float]] = None) -> Affine:
    """Çok terimli toplamı tek sözlükte biriktir"""
    terms: Dict[int, float] = {}
    const = 0.0
    depth = 0
    coefs = coefs if coefs is not None else [1.0] * len(exprs)
    for expr, coef in zip(exprs, coefs):
        if coef == 0.0:
            continue
        for node, value in expr.terms.items():
            terms[node] = terms.get(node, 0.0) + coef * value
        const += coef * expr.const
        depth = max(depth, expr.depth)
    return Affine({k: v for k, v in terms.items() if v != 0.0}, const, depth)


class NetworkBuilder:
    """Nöron grafiğinden atlama bağlantılı ağ üretici"""

    def __init__(self, input_dim: int):
        if input_dim < 1:
            raise ContractError("input_dim en az 1 olmalı")
        self.input_dim = input_dim
        self._rows: List[Tuple[Dict[int, float], float]] = []
        self._layers: List[List[int]] = []

    def input(self, index: int) -> Affine:
        if not 0 <= index < self.input_dim:
            raise ContractError(f"Giriş indeksi aralık dışında: {index}")
        return Affine({index: 1.0}, 0.0, 0)

    def inputs(self) -> List[Affine]:
        return [self.input(i) for i in range(self.input_dim)]

    @staticmethod
    def const(value: float) -> Affine:
        return Affine({}, value, 0)

    @property
    def hidden_count(self) -> int:
        return len(self._rows)

    def relu(self, expr: Affine, layer: Optional[int] = None) -> Affine:
        """ϱ(expr) nöronu; varsayılan katman = ifade derinliği + 1"""
        target = expr.depth + 1 if layer is None else int(layer)
        if target <= expr.depth:
            raise ContractError(f"Katman {target}, ifade derinliği {expr.depth} üzerinde olmalı")
        node = self.input_dim + len(self._rows)
        self._rows.append((dict(expr.terms), expr.const))
        while len(self._layers) < target:
            self._layers.append([])
        self._layers[target - 1].append(node)
        return Affine({node: 1.0}, 0.0, target)

    def split(self, expr: Affine) -> Tuple[Affine, Affine]:
        """(ϱ(v), ϱ(−v)) çifti; v = ϱ(v) − ϱ(−v)"""
        return self.relu(expr), self.relu(-expr)

    def materialize(self, expr: Affine) -> Affine:
        """İfadeyi tek katmanlık iki nörondan geçir (terim sayısını 2'ye indir)"""
        pos, neg = self.split(expr)
        return pos - neg

    def build(self, outputs: Sequence[Affine]) -> Network:
        """Çıkış ifadelerinden Network üret"""
        if not outputs:
            raise ContractError("En az bir çıkış gerekli")
        d = self.input_dim
        colmap = np.empty(d + len(self._rows), dtype=np.int64)
        colmap[:d] = np.arange(d)

        widths = [d]
        layers = []
        for nodes in self._layers:
            offset = sum(widths)
            for pos, node in enumerate(nodes):
                colmap[node] = offset + pos
            rows, srcs, vals = [], [], []
            bias = np.empty(len(nodes))
            for i, node in enumerate(nodes):
                terms, const = self._rows[node - d]
                rows.extend([i] * len(terms))
                srcs.extend(terms.keys())
                vals.extend(terms.values())
                bias[i] = const
            cols = colmap[np.asarray(srcs, dtype=np.int64)] if srcs else np.empty(0, dtype=np.int64)
            layers.append(AffineMap(len(nodes), widths, rows, cols, vals, bias))
            widths.append(len(nodes))

        rows, srcs, vals = [], [], []
        bias = np.empty(len(outputs))
        for i, expr in enumerate(outputs):
            rows.extend([i] * len(expr.terms))
            srcs.extend(expr.terms.keys())
            vals.extend(expr.terms.values())
            bias[i] = expr.const
        cols = colmap[np.asarray(srcs, dtype=np.int64)] if srcs else np.empty(0, dtype=np.int64)
        layers.append(AffineMap(len(outputs), widths, rows, cols, vals, bias))

        net = Network(d, layers)
        logger.debug(f"Builder ağı üretti: {net}")
        return net
