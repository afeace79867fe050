"""
relu-transport - Network Service
Atlama bağlantılı ReLU ağları için kesin veri modeli, değerlendirici ve serileştirme
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy import sparse

from ..core.config import settings, Settings
from ..core.errors import InputShapeError, ContractError, NetworkParseError
from ..models.network_models import SizeReport

logger = logging.getLogger(__name__)

FORMAT_TAG = "relunet-v1"


class AffineMap:
    """Seyrek (A, b) katmanı; blok genişlikleri açıkça saklanır"""

    __slots__ = ("rows", "widths", "row_idx", "col_idx", "values", "bias", "matrix")

    def __init__(self, rows: int, widths: Sequence[int], row_idx=(), col_idx=(), values=(), bias=None):
        self.rows = int(rows)
        self.widths = tuple(int(w) for w in widths)
        if self.rows < 0 or any(w < 0 for w in self.widths):
            raise ContractError("Katman boyutları negatif olamaz")
        cols = sum(self.widths)

        row_idx = np.asarray(row_idx, dtype=np.int64).ravel()
        col_idx = np.asarray(col_idx, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if not len(row_idx) == len(col_idx) == len(values):
            raise ContractError("Üçlü dizilerinin uzunlukları farklı")
        if len(values) and (row_idx.min() < 0 or row_idx.max() >= self.rows
                            or col_idx.min() < 0 or col_idx.max() >= cols):
            raise ContractError("Üçlü indeksi matris dışında")

        # Sıralı, tekrarsız, sıfırsız üçlüler
        matrix = sparse.coo_matrix((values, (row_idx, col_idx)), shape=(self.rows, cols)).tocsr()
        matrix.sum_duplicates()
        matrix.eliminate_zeros()
        matrix.sort_indices()
        self.matrix = matrix
        coo = matrix.tocoo()
        self.row_idx = coo.row.astype(np.int64)
        self.col_idx = coo.col.astype(np.int64)
        self.values = coo.data.astype(np.float64)

        if bias is None:
            bias = np.zeros(self.rows)
        bias = np.array(bias, dtype=np.float64).ravel()
        if len(bias) != self.rows:
            raise ContractError("Bias uzunluğu satır sayısına eşit olmalı")
        bias[bias == 0.0] = 0.0  # -0.0 -> 0.0
        self.bias = bias

        for arr in (self.row_idx, self.col_idx, self.values, self.bias):
            arr.setflags(write=False)

    @property
    def cols(self) -> int:
        return sum(self.widths)

    @property
    def nnz_matrix(self) -> int:
        return int(self.matrix.nnz)

    @property
    def nnz_bias(self) -> int:
        return int(np.count_nonzero(self.bias))

    @property
    def weights(self) -> int:
        """Bu katmanın W katkısı"""
        return self.nnz_matrix + self.nnz_bias

    def same_as(self, other: "AffineMap") -> bool:
        """Bit düzeyinde eşitlik"""
        return (self.rows == other.rows and self.widths == other.widths
                and np.array_equal(self.row_idx, other.row_idx)
                and np.array_equal(self.col_idx, other.col_idx)
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.bias, other.bias))


class Network:
    """Atlama bağlantılı ReLU ağı; oluşturulduktan sonra değişmez"""

    __slots__ = ("input_dim", "layers", "_offsets")

    def __init__(self, input_dim: int, layers: Sequence[AffineMap]):
        self.input_dim = int(input_dim)
        self.layers: Tuple[AffineMap, ...] = tuple(layers)
        if self.input_dim < 1:
            raise ContractError("input_dim en az 1 olmalı")
        if not self.layers:
            raise ContractError("Ağ en az bir katman içermeli")

        expected = [self.input_dim]
        for idx, layer in enumerate(self.layers):
            if layer.widths != tuple(expected):
                raise ContractError(
                    f"Katman {idx + 1} blok genişlikleri {layer.widths}, beklenen {tuple(expected)}"
                )
            expected.append(layer.rows)
        if self.layers[-1].rows < 1:
            raise ContractError("Çıkış boyutu en az 1 olmalı")

        offsets = [self.input_dim]
        for layer in self.layers[:-1]:
            offsets.append(offsets[-1] + layer.rows)
        self._offsets = tuple(offsets)

    @property
    def depth(self) -> int:
        """L(Φ)"""
        return len(self.layers)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].rows

    @property
    def hidden_widths(self) -> List[int]:
        return [layer.rows for layer in self.layers[:-1]]

    @property
    def weights(self) -> int:
        """W(Φ)"""
        return sum(layer.weights for layer in self.layers)

    @property
    def neurons(self) -> int:
        """N(Φ) = d + Σ N_j"""
        return self.input_dim + sum(layer.rows for layer in self.layers)

    def size(self) -> SizeReport:
        return SizeReport(layers=self.depth, weights=self.weights, neurons=self.neurons)

    def _forward(self, X: np.ndarray) -> np.ndarray:
        """Tek parça için katman özyinelemesi"""
        points = X.shape[0]
        state = np.empty((self._offsets[-1], points))
        state[: self.input_dim] = X.T
        for layer, start in zip(self.layers[:-1], self._offsets[:-1]):
            z = layer.matrix @ state[:start]
            z += layer.bias[:, None]
            np.maximum(z, 0.0, out=z)
            state[start:start + layer.rows] = z
        last = self.layers[-1]
        out = last.matrix @ state[: self._offsets[-1]]
        out += last.bias[:, None]
        return np.asarray(out).T

    def realize(self, x, config: Optional[Settings] = None) -> np.ndarray:
        """R(Φ)(x); x tek vektör (d,) veya yığın (P, d)"""
        cfg = config or settings
        arr = np.asarray(x, dtype=np.float64)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.input_dim:
            raise InputShapeError(
                f"Giriş boyutu {arr.shape[-1] if arr.ndim else 0}, ağ input_dim {self.input_dim}"
            )
        points = arr.shape[0]
        if points == 0:
            return np.zeros((0, self.output_dim))

        chunk = max(1, cfg.eval_chunk_bytes // (8 * self._offsets[-1]))
        starts = list(range(0, points, chunk))
        if cfg.threads > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                parts = list(pool.map(lambda s: self._forward(arr[s:s + chunk]), starts))
        else:
            parts = [self._forward(arr[s:s + chunk]) for s in starts]
        out = np.vstack(parts)
        return out[0] if single else out

    def __call__(self, x) -> np.ndarray:
        return self.realize(x)

    def __repr__(self) -> str:
        return f"Network(d={self.input_dim}, L={self.depth}, W={self.weights}, out={self.output_dim})"


def realize(net: Network, x, config: Optional[Settings] = None) -> np.ndarray:
    """Ağ realizasyonu"""
    return net.realize(x, config)


def size(net: Network) -> SizeReport:
    """Ağ boyut raporu"""
    return net.size()


def serialize(net: Network) -> bytes:
    """Ağı relunet-v1 metin biçimine yaz"""
    lines = [FORMAT_TAG, f"input_dim {net.input_dim}", f"layers {net.depth}"]
    for idx, layer in enumerate(net.layers):
        lines.append(f"layer {idx} rows {layer.rows} widths {' '.join(str(w) for w in layer.widths)}")
        lines.append(f"matrix {layer.nnz_matrix}")
        for r, c, v in zip(layer.row_idx, layer.col_idx, layer.values):
            lines.append(f"{r} {c} {'%.17g' % v}")
        nonzero = np.flatnonzero(layer.bias)
        lines.append(f"bias {len(nonzero)}")
        for i in nonzero:
            lines.append(f"{i} {'%.17g' % layer.bias[i]}")
    lines.append("end")
    return ("\n".join(lines) + "\n").encode("ascii")


class _Cursor:
    """Satır okuyucu; hata mesajları için bayt konumu tutar"""

    def __init__(self, text: str):
        self.lines = text.splitlines(keepends=True)
        self.index = 0
        self.offset = 0

    def next(self) -> Tuple[List[str], int]:
        if self.index >= len(self.lines):
            raise NetworkParseError("Beklenmeyen dosya sonu", self.offset)
        line = self.lines[self.index]
        start = self.offset
        self.index += 1
        self.offset += len(line.encode("utf-8"))
        return line.split(), start

    def expect(self, keyword: str, count: int) -> Tuple[List[str], int]:
        tokens, start = self.next()
        if len(tokens) < count + 1 or tokens[0] != keyword:
            raise NetworkParseError(f"'{keyword}' satırı bekleniyordu", start)
        return tokens, start


def _to_int(token: str, offset: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise NetworkParseError(f"Tamsayı bekleniyordu: {token!r}", offset)


def _to_float(token: str, offset: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise NetworkParseError(f"Sayı bekleniyordu: {token!r}", offset)


def deserialize(data: bytes) -> Network:
    """relunet-v1 metninden ağ oku"""
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise NetworkParseError("Geçersiz UTF-8", e.start)

    cursor = _Cursor(text)
    tokens, start = cursor.next()
    if tokens != [FORMAT_TAG]:
        raise NetworkParseError(f"Sürüm etiketi {FORMAT_TAG} bekleniyordu", start)
    tokens, start = cursor.expect("input_dim", 1)
    input_dim = _to_int(tokens[1], start)
    tokens, start = cursor.expect("layers", 1)
    depth = _to_int(tokens[1], start)
    if depth < 1:
        raise NetworkParseError("Ağ en az bir katman içermeli", start)

    layers = []
    for idx in range(depth):
        tokens, start = cursor.expect("layer", 4)
        if tokens[2] != "rows" or tokens[4] != "widths":
            raise NetworkParseError("Katman başlığı bozuk", start)
        if _to_int(tokens[1], start) != idx:
            raise NetworkParseError("Katman sırası bozuk", start)
        rows = _to_int(tokens[3], start)
        widths = [_to_int(tok, start) for tok in tokens[5:]]

        tokens, start = cursor.expect("matrix", 1)
        nnz = _to_int(tokens[1], start)
        r_idx = np.empty(nnz, dtype=np.int64)
        c_idx = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for j in range(nnz):
            tokens, start = cursor.next()
            if len(tokens) != 3:
                raise NetworkParseError("'r c v' satırı bekleniyordu", start)
            r_idx[j] = _to_int(tokens[0], start)
            c_idx[j] = _to_int(tokens[1], start)
            vals[j] = _to_float(tokens[2], start)

        tokens, start = cursor.expect("bias", 1)
        count = _to_int(tokens[1], start)
        bias = np.zeros(max(rows, 0))
        for _ in range(count):
            tokens, start = cursor.next()
            if len(tokens) != 2:
                raise NetworkParseError("'i v' satırı bekleniyordu", start)
            i = _to_int(tokens[0], start)
            if not 0 <= i < rows:
                raise NetworkParseError("Bias indeksi aralık dışında", start)
            bias[i] = _to_float(tokens[1], start)

        try:
            layers.append(AffineMap(rows, widths, r_idx, c_idx, vals, bias))
        except ContractError as e:
            raise NetworkParseError(str(e), start)

    tokens, start = cursor.next()
    if tokens != ["end"]:
        raise NetworkParseError("'end' bekleniyordu", start)
    try:
        return Network(input_dim, layers)
    except ContractError as e:
        raise NetworkParseError(str(e), start)


def random_network(rng: np.random.Generator, input_dim: int, output_dim: int, depth: int,
                   max_width: int = 6, density: float = 0.6) -> Network:
    """Özellik testleri için rastgele ağ"""
    widths = [input_dim]
    layers = []
    for ell in range(depth):
        rows = output_dim if ell == depth - 1 else int(rng.integers(1, max_width + 1))
        cols = sum(widths)
        A = rng.normal(size=(rows, cols)) * (rng.random((rows, cols)) < density)
        b = rng.normal(size=rows) * (rng.random(rows) < density)
        r, c = np.nonzero(A)
        layers.append(AffineMap(rows, widths, r, c, A[r, c], b))
        widths.append(rows)
    return Network(input_dim, layers)


def second_differences(net: Network, a, b, samples: int = 1025) -> np.ndarray:
    """Doğru parçası boyunca ikinci farklar (parçalı afinlik kontrolü)"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lam = np.linspace(0.0, 1.0, samples)[:, None]
    values = net.realize(a[None, :] + lam * (b - a)[None, :])
    return values[2:] - 2.0 * values[1:-1] + values[:-2]
