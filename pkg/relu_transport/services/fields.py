"""
relu-transport - Fields
Hazır vektör alanları, başlangıç koşulları, hedef fonksiyonlar ve sembolik ifadeler
"""

from typing import Callable, Dict, List, Optional, Sequence
import logging
import math

import numpy as np
import sympy as sp

from ..core.errors import ConfigError
from ..models.problem_models import InitialCondition, InitialKind, SmoothTarget
from .estimates import sample_box, symbolic_norms
from .graph_builder import NetworkBuilder, affine_sum
from .network import Network

logger = logging.getLogger(__name__)


def make_symbols(n: int, D: int, with_time: bool = True) -> List[sp.Symbol]:
    """(t, x0.., eta0..) sembolleri"""
    symbols = [sp.Symbol("t")] if with_time else []
    symbols += [sp.Symbol(f"x{i}") for i in range(n)]
    symbols += [sp.Symbol(f"eta{j}") for j in range(D)]
    return symbols


def parse_expression(text: str, symbols: Sequence[sp.Symbol]) -> sp.Expr:
    """Metin ifadeyi sympy'ye çevir; bilinmeyen sembol yapılandırma hatasıdır"""
    names = {str(s): s for s in symbols}
    if "x0" in names and "x1" not in names:
        names.setdefault("x", names["x0"])
    if "eta0" in names and "eta1" not in names:
        names.setdefault("eta", names["eta0"])
    try:
        expr = sp.sympify(text, locals=names)
    except (sp.SympifyError, SyntaxError, TypeError) as e:
        raise ConfigError(f"İfade ayrıştırılamadı: {text!r} ({e})")
    unknown = expr.free_symbols - set(symbols)
    if unknown:
        raise ConfigError(f"Bilinmeyen semboller: {sorted(str(s) for s in unknown)}")
    return expr


class SymbolicFunction:
    """sympy ifadesinden yığın değerlendirici ve türev kahini"""

    def __init__(self, expr: sp.Expr, symbols: Sequence[sp.Symbol]):
        self.expr = sp.sympify(expr)
        self.symbols = list(symbols)
        self._cache: Dict[tuple, Callable] = {}

    @property
    def dim(self) -> int:
        return len(self.symbols)

    @property
    def is_zero(self) -> bool:
        return self.expr == 0

    def _compiled(self, alpha: tuple) -> Callable:
        if alpha not in self._cache:
            expr = self.expr
            for sym, order in zip(self.symbols, alpha):
                if order:
                    expr = sp.diff(expr, sym, order)
            self._cache[alpha] = sp.lambdify(self.symbols, expr, "numpy")
        return self._cache[alpha]

    def derivative(self, alpha: Sequence[int], X: np.ndarray) -> np.ndarray:
        """∂^α f, X (P, dim)"""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        fn = self._compiled(tuple(int(a) for a in alpha))
        value = fn(*[X[:, i] for i in range(self.dim)])
        return np.broadcast_to(np.asarray(value, dtype=np.float64), (X.shape[0],)).copy()

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.derivative((0,) * self.dim, X)


def _stack(t, x, eta) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    points = t.shape[0]
    x = np.asarray(x, dtype=np.float64).reshape(points, -1)
    eta = np.asarray(eta, dtype=np.float64)
    eta = eta.reshape(points, -1) if eta.size else np.zeros((points, 0))
    return np.hstack([t, x, eta])


def txeta_handle(fn: SymbolicFunction) -> Callable:
    """(t, x, η) imzalı yığın işleyici"""
    return lambda t, x, eta: fn(_stack(t, x, eta))


class FieldSpec:
    """Vektör alanı tanımı ve C^j norm hesaplayıcısı"""

    def __init__(self, name: str, n: int, D: int, V: Callable, div_V: Optional[Callable],
                 growth_C: float, norms: Callable[[float, int], Dict[int, float]],
                 default_k: int = 3, estimated: bool = False):
        self.name = name
        self.n = n
        self.D = D
        self.V = V
        self.div_V = div_V
        self.growth_C = growth_C
        self.norms = norms
        self.default_k = default_k
        self.estimated = estimated


def _zeros_div(t, x, eta):
    return np.zeros(np.asarray(x).shape[0])


def const_field(n: int, D: int, velocity: Sequence[float]) -> FieldSpec:
    """V ≡ v"""
    v = np.asarray(velocity, dtype=np.float64).ravel()
    if len(v) == 1:
        v = np.full(n, v[0])
    if len(v) != n:
        raise ConfigError(f"Hız vektörü uzunluğu {len(v)}, n={n}")
    speed = float(np.linalg.norm(v))

    def V(t, x, eta):
        return np.broadcast_to(v, (np.asarray(x).shape[0], n)).copy()

    return FieldSpec("const", n, D, V, _zeros_div, max(speed, 1e-9),
                     lambda G0, k: {j: speed for j in range(k + 1)})


def linear_field(n: int, D: int) -> FieldSpec:
    """V(x) = x"""

    def V(t, x, eta):
        return np.array(x, dtype=np.float64, copy=True)

    def div(t, x, eta):
        return np.full(np.asarray(x).shape[0], float(n))

    return FieldSpec("linear", n, D, V, div, 1.0,
                     lambda G0, k: {j: (G0 if j == 0 else max(G0, 1.0)) for j in range(k + 1)})


def rotation_field(n: int, D: int) -> FieldSpec:
    """V = (1+η₀)(−x₂, x₁), n = 2"""
    if n != 2:
        raise ConfigError("rotation alanı n = 2 gerektirir")
    C = 2.0 if D >= 1 else 1.0

    def V(t, x, eta):
        x = np.asarray(x, dtype=np.float64)
        factor = 1.0 + np.asarray(eta)[:, 0] if D >= 1 else np.ones(x.shape[0])
        return np.stack([-factor * x[:, 1], factor * x[:, 0]], axis=1)

    return FieldSpec("rotation", n, D, V, _zeros_div, C,
                     lambda G0, k: {j: max(C * G0, C) for j in range(k + 1)})


def param_shear_field(n: int, D: int) -> FieldSpec:
    """Her bileşende V = ortalama(η)"""
    level = 1.0 if D >= 1 else 0.0

    def V(t, x, eta):
        points = np.asarray(x).shape[0]
        speed = np.asarray(eta, dtype=np.float64).mean(axis=1) if D >= 1 else np.zeros(points)
        return np.repeat(speed[:, None], n, axis=1)

    return FieldSpec("param-shear", n, D, V, _zeros_div, 1.0,
                     lambda G0, k: {j: level for j in range(k + 1)})


def inline_field(components: Sequence[str], n: int, D: int, T: float, K_lo: Sequence[float],
                 K_hi: Sequence[float], seed: int = 0, samples: int = 4096) -> FieldSpec:
    """sympy bileşenlerinden alan; C ve C^j normları örneklemeyle tahmin edilir"""
    if len(components) != n:
        raise ConfigError(f"FIELD {len(components)} bileşen içeriyor, n={n}")
    symbols = make_symbols(n, D)
    exprs = [parse_expression(c, symbols) for c in components]
    funcs = [SymbolicFunction(e, symbols) for e in exprs]
    div = SymbolicFunction(sum(sp.diff(e, symbols[1 + i]) for i, e in enumerate(exprs)), symbols)

    def V(t, x, eta):
        X = _stack(t, x, eta)
        return np.stack([fn(X) for fn in funcs], axis=1)

    radius = math.sqrt(sum(max(abs(lo), abs(hi)) ** 2 for lo, hi in zip(K_lo, K_hi)))
    lo = [0.0] + [-(2 * radius + 1)] * n + [0.0] * D
    hi = [T] + [2 * radius + 1] * n + [1.0] * D
    X = sample_box(lo, hi, samples, seed)
    values = np.stack([fn(X) for fn in funcs], axis=1)
    growth = 1.5 * float(np.max(np.linalg.norm(values, axis=1) / (1.0 + np.linalg.norm(X[:, 1:1 + n], axis=1))))
    growth = max(growth, 1e-9)

    def norms(G0: float, k: int) -> Dict[int, float]:
        box_lo = [0.0] + [-G0] * n + [0.0] * D
        box_hi = [T] + [G0] * n + [1.0] * D
        return symbolic_norms(funcs, box_lo, box_hi, k, seed)

    logger.info(f"Satır içi alan: C≈{growth:.4g} (tahmini)")
    return FieldSpec("inline", n, D, V, txeta_handle(div), growth, norms, estimated=True)


def builtin_field(key: str, n: int, D: int, velocity: Optional[str] = None) -> FieldSpec:
    """Anahtar ile hazır alan seç"""
    if key == "const":
        values = [float(v) for v in (velocity or "0.5").replace(";", ",").split(",") if v.strip()]
        return const_field(n, D, values)
    if key == "linear":
        return linear_field(n, D)
    if key == "rotation":
        return rotation_field(n, D)
    if key == "param-shear":
        return param_shear_field(n, D)
    raise ConfigError(f"Bilinmeyen problem anahtarı: {key}")


def ramp_initial(n: int, direction: Optional[Sequence[float]] = None, offset: float = 0.0) -> InitialCondition:
    """u₀(x) = max(0, 1 − |w·x − c|), kesin ağ ϱ(1 − ϱ(z) − ϱ(−z))"""
    w = np.zeros(n) if direction is None else np.asarray(direction, dtype=np.float64)
    if direction is None:
        w[0] = 1.0

    def evaluator(x):
        z = np.atleast_2d(x) @ w - offset
        return np.maximum(0.0, 1.0 - np.abs(z))

    builder = NetworkBuilder(n)
    inputs = builder.inputs()
    z = affine_sum(inputs, list(w)) - offset
    up, down = builder.split(z)
    net = builder.build([builder.relu(1.0 - up - down)])
    return InitialCondition(name="ramp", kind=InitialKind.RAMP, n=n, evaluator=evaluator,
                            exact_net=net, lipschitz=float(np.linalg.norm(w)), sup_norm=1.0)


def piecewise_initial(n: int, kinks: Sequence[float], values: Sequence[float],
                      direction: Optional[Sequence[float]] = None) -> InitialCondition:
    """w·x boyunca sürekli parçalı afin u₀; dış eğimler 0"""
    b = np.asarray(kinks, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if len(b) < 1 or len(b) != len(v):
        raise ConfigError("U0_KINKS ve U0_VALUES aynı uzunlukta ve boş olmamalı")
    if np.any(np.diff(b) <= 0):
        raise ConfigError("Kırılma noktaları kesin artan olmalı")
    w = np.zeros(n) if direction is None else np.asarray(direction, dtype=np.float64)
    if direction is None:
        w[0] = 1.0
    slopes = np.concatenate([[0.0], np.diff(v) / np.diff(b), [0.0]])
    jumps = np.diff(slopes)

    def evaluator(x):
        z = np.atleast_2d(x) @ w
        return np.interp(z, b, v)

    builder = NetworkBuilder(n)
    z = affine_sum(builder.inputs(), list(w))
    hinges = [builder.relu(z - bj) for bj in b]
    out = affine_sum(hinges, list(jumps)) + float(v[0])
    lip = float(np.max(np.abs(slopes)) * np.linalg.norm(w))
    return InitialCondition(name="piecewise", kind=InitialKind.PIECEWISE_AFFINE, n=n, evaluator=evaluator,
                            exact_net=builder.build([out]), lipschitz=lip, sup_norm=float(np.max(np.abs(v))))


def zero_initial(n: int) -> InitialCondition:
    """u₀ ≡ 0"""
    builder = NetworkBuilder(n)
    return InitialCondition(name="zero", kind=InitialKind.PIECEWISE_AFFINE, n=n,
                            evaluator=lambda x: np.zeros(np.atleast_2d(x).shape[0]),
                            exact_net=builder.build([builder.const(0.0)]), lipschitz=0.0, sup_norm=0.0)


def smooth_initial(text: str, n: int, smoothness: int, radius: float, seed: int = 0) -> InitialCondition:
    """sympy ifadesinden düzgün u₀; r = s/n"""
    symbols = make_symbols(n, 0, with_time=False)
    fn = SymbolicFunction(parse_expression(text, symbols), symbols)
    if fn.is_zero:
        return zero_initial(n)
    lo, hi = [-radius] * n, [radius] * n
    norms = symbolic_norms([fn], lo, hi, smoothness, seed)
    X = sample_box(lo, hi, 4096, seed)
    grad = np.stack([fn.derivative(tuple(int(i == j) for i in range(n)), X) for j in range(n)], axis=1)
    return InitialCondition(
        name=text, kind=InitialKind.SMOOTH, n=n, evaluator=fn, smoothness=smoothness,
        norm_bound=max(norms[smoothness], 1e-12), r=smoothness / n,
        lipschitz=1.5 * float(np.max(np.linalg.norm(grad, axis=1))),
        sup_norm=1.5 * float(np.max(np.abs(fn(X)))), derivative_oracle=fn.derivative,
    )


def smooth_target(name: str, dim: int = 1, k: Optional[int] = None,
                  lo: Optional[Sequence[float]] = None, hi: Optional[Sequence[float]] = None,
                  seed: int = 0) -> SmoothTarget:
    """Hazır hedefler: square, sine2d, exp_neg, exp; aksi halde x0.. ifadesi"""
    if name == "square":
        dim, text, k = 1, "x0**2", k or 2
    elif name == "sine2d":
        dim, text, k = 2, "sin(pi*x0)*sin(pi*x1)/pi**2", k or 2
    elif name in ("exp_neg", "exp"):
        dim, text, k = 1, ("exp(-x0)" if name == "exp_neg" else "exp(x0)"), k or 3
    else:
        text, k = name, k or 2
    lo = list(lo) if lo is not None else [0.0] * dim
    hi = list(hi) if hi is not None else [1.0] * dim
    symbols = make_symbols(dim, 0, with_time=False)
    fn = SymbolicFunction(parse_expression(text, symbols), symbols)
    norm = symbolic_norms([fn], lo, hi, k, seed)[k]
    return SmoothTarget(name=name, dim=dim, lo=lo, hi=hi, evaluator=fn, k=k,
                        norm_bound=max(norm, 1e-12), derivative_oracle=fn.derivative)
