"""
relu-transport - Smooth Approximation
Düzgün fonksiyonlar için yerel Taylor + birim ayrışımı ağı, hata defteri ve a-posteriori doğrulama
"""

from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.special import comb

from ..core.config import settings, Settings
from ..core.errors import BudgetExceededError, CertificationError, ConfigError
from ..models.certificate_models import ApproxCertificate
from ..models.problem_models import SmoothTarget
from ..utils.helpers import multi_indices, multi_indices_upto
from .calculus import emit_product, levels_for_error
from .derivatives import DerivativeProbe, alpha_factorial
from .estimates import sample_box
from .fields import smooth_target
from .graph_builder import Affine, NetworkBuilder, affine_sum
from .network import Network

logger = logging.getLogger(__name__)

# Hata defteri payları (toplam = 1)
REMAINDER_SHARE = 7.0 / 16.0
FREEZE_SHARE = 1.0 / 32.0
PRUNE_SHARE = 1.0 / 32.0
POU_SHARE = 1.0 / 4.0
PRODUCT_SHARE = 3.0 / 16.0
MONOMIAL_SHARE = 1.0 / 16.0

GADGET_MARGIN = 1.01
INCONSISTENT_FACTOR = 2.0
UNIVARIATE_LIBRARY = ("exp", "exp_neg")


class _Plan:
    """Izgara seçimi: aktif eksenler, Taylor mertebesi, kalan sabiti"""

    def __init__(self, active: List[int], order: int, remainder_constant: float, grid_n: int,
                 warnings: List[str]):
        self.active = active
        self.order = order
        self.remainder_constant = remainder_constant
        self.grid_n = grid_n
        self.warnings = warnings


def _embed(local: Sequence[int], active: Sequence[int], dim: int) -> Tuple[int, ...]:
    alpha = [0] * dim
    for axis, order in zip(active, local):
        alpha[axis] = order
    return tuple(alpha)


def grid_for_remainder(constant: float, order: int, budget: float) -> int:
    """B(½) ≤ budget ise tek yama, değilse n = max(2, ⌈(C/budget)^{1/(p+1)}⌉)"""
    if not math.isfinite(constant):
        raise BudgetExceededError(f"Kalan sabiti sonlu değil: {constant}")
    if constant * 0.5 ** (order + 1) <= budget:
        return 1
    return max(2, int(math.ceil((constant / budget) ** (1.0 / (order + 1)) - 1e-12)))


def _taylor_order(target: SmoothTarget, probe: DerivativeProbe, cfg: Settings, warnings: List[str]) -> int:
    requested = target.k - 1
    cap = cfg.oracle_max_taylor_order if probe.has_oracle else cfg.fd_max_taylor_order
    if requested > cap:
        source = "kahin" if probe.has_oracle else "sonlu fark"
        warnings.append(f"Taylor mertebesi {requested} -> {cap} ({source} sınırı)")
    return min(requested, cap)


def _plan(target: SmoothTarget, epsilon: float, probe: DerivativeProbe, cfg: Settings,
          bound_source: str) -> _Plan:
    """Eksen dondurma, kalan sabiti ve ızgara çözünürlüğü"""
    d = target.dim
    warnings: List[str] = []
    Y = probe.sample_points(cfg.derivative_samples, cfg.seed)
    proof = bound_source == "proof"

    firsts = list(multi_indices(d, 1))
    first_sups = probe.sampled_sups(firsts, Y)
    if proof:
        variation = target.norm_bound * probe.scale
    else:
        variation = cfg.safety_factor * first_sups
    active = [i for i in range(d) if variation[i] > FREEZE_SHARE * epsilon / d]

    order = _taylor_order(target, probe, cfg, warnings)
    highs = [alpha for alpha in multi_indices(d, order + 1)
             if all(alpha[i] == 0 for i in range(d) if i not in active)]
    high_sups = probe.sampled_sups(highs, Y)
    if proof:
        # Beyan edilen W^{k,∞} sınırı birim küpe taşınır
        constant = sum(target.norm_bound * probe.unit_factor(alpha) / alpha_factorial(alpha) for alpha in highs)
    else:
        constant = sum(cfg.safety_factor * s / alpha_factorial(alpha) for alpha, s in zip(highs, high_sups))

    observed = max(float(np.max(np.abs(probe.values(Y)))),
                   probe.original_sup(firsts, first_sups),
                   probe.original_sup(highs, high_sups) if order + 1 <= target.k else 0.0)
    if observed > INCONSISTENT_FACTOR * target.norm_bound:
        message = f"Tutarsız metaveri: türev tahmini {observed:.4g} > {INCONSISTENT_FACTOR}·norm_bound ({target.norm_bound:.4g})"
        logger.warning(message)
        warnings.append(message)

    grid_n = grid_for_remainder(constant, order, REMAINDER_SHARE * epsilon) if active else 1
    return _Plan(active, order, constant, grid_n, warnings)


def _check_nodes(grid_n: int, active_count: int, cfg: Settings) -> None:
    nodes = (grid_n + 1) ** active_count if grid_n > 1 else 1
    if nodes > cfg.max_grid_nodes:
        raise BudgetExceededError(
            f"Izgara düğüm sayısı {nodes} > max_grid_nodes={cfg.max_grid_nodes} (n={grid_n}, aktif eksen={active_count})"
        )


def _node_points(grid_n: int, active: Sequence[int], dim: int) -> np.ndarray:
    """Birim koordinatlarda düğümler; dondurulmuş eksenler merkezde"""
    if grid_n == 1 or not active:
        return np.full((1, dim), 0.5)
    ticks = np.arange(grid_n + 1) / grid_n
    local = np.array(list(product(ticks, repeat=len(active))))
    Y = np.full((local.shape[0], dim), 0.5)
    Y[:, list(active)] = local
    return Y


def taylor_coefficients(derivs: np.ndarray, alphas: Sequence[Tuple[int, ...]],
                        nodes: np.ndarray) -> np.ndarray:
    """Yerel Taylor polinomlarının global tek terimli katsayıları (düğüm × β)"""
    coef = np.zeros((nodes.shape[0], len(alphas)))
    for ai, alpha in enumerate(alphas):
        weight = derivs[ai] / alpha_factorial(alpha)
        for bi, beta in enumerate(alphas):
            if any(b > a for a, b in zip(alpha, beta)):
                continue
            factor = np.ones(nodes.shape[0])
            for axis, (a, b) in enumerate(zip(alpha, beta)):
                if a > b:
                    factor = factor * comb(a, b, exact=True) * (-nodes[:, axis]) ** (a - b)
            coef[:, bi] += weight * factor
    return coef


def prune_mask(coef: np.ndarray, budget: float) -> np.ndarray:
    """Satır başına en küçük |c| terimleri toplamı budget'ı aşmayacak şekilde at"""
    keep = np.ones_like(coef, dtype=bool)
    for row in range(coef.shape[0]):
        magnitude = np.abs(coef[row])
        order = np.argsort(magnitude, kind="stable")
        dropped = np.cumsum(magnitude[order]) <= budget
        keep[row, order[dropped]] = False
    return keep


class _MonomialCache:
    """y^β tek terimlileri; zincirleme çarpma aygıtları ile bir kez kurulur"""

    def __init__(self, builder: NetworkBuilder, units: List[Affine], levels: int):
        self.builder = builder
        self.units = units
        self.levels = levels
        self.cache: Dict[Tuple[int, ...], Affine] = {}

    def get(self, beta: Tuple[int, ...]) -> Affine:
        degree = sum(beta)
        if degree == 0:
            return NetworkBuilder.const(1.0)
        if degree == 1:
            return self.units[beta.index(1)]
        if beta not in self.cache:
            axis = next(i for i, b in enumerate(beta) if b)
            lower = tuple(b - (i == axis) for i, b in enumerate(beta))
            self.cache[beta] = emit_product(self.builder, self.get(lower), self.units[axis],
                                            GADGET_MARGIN, levels=self.levels)
        return self.cache[beta]


def _emit_hats(builder: NetworkBuilder, y: Affine, grid_n: int) -> List[Affine]:
    """ψ_m = r_{m−1} − 2r_m + r_{m+1}, r_j = ϱ(n·y − j); Σ ψ_m = 1 on [0,1]"""
    ramps = [builder.relu(y * grid_n - j) for j in range(-1, grid_n + 2)]
    return [affine_sum([ramps[m], ramps[m + 1], ramps[m + 2]], [1.0, -2.0, 1.0]) for m in range(grid_n + 1)]


def partition_of_unity_net(grid_n: int, lo: float = 0.0, hi: float = 1.0) -> Network:
    """[lo, hi] üzerinde grid_n + 1 şapka fonksiyonu (çıkış başına bir tane)"""
    if grid_n < 1:
        raise ConfigError("grid_n ≥ 1 olmalı")
    if not hi > lo:
        raise ConfigError("Aralık dejenere")
    builder = NetworkBuilder(1)
    y = (builder.input(0) - lo) / (hi - lo)
    return builder.build(_emit_hats(builder, y, grid_n))


def _assemble(target: SmoothTarget, epsilon: float, plan: _Plan, grid_n: int,
              probe: DerivativeProbe, cfg: Settings) -> Tuple[Network, float]:
    """Ağı kur; (ağ, çarpma payı) döndür"""
    d = target.dim
    active = plan.active
    builder = NetworkBuilder(d)
    if not active:
        centre = probe.values(np.full((1, d), 0.5))[0]
        return builder.build([builder.const(float(centre))]), 0.0

    lo, scale = probe.lo, probe.scale
    units = [(builder.input(i) - float(lo[i])) / float(scale[i]) for i in active]
    d_a = len(active)
    p = plan.order

    Y_nodes = _node_points(grid_n, active, d)
    local_nodes = Y_nodes[:, active]
    alphas = multi_indices_upto(d_a, p)
    derivs = probe.derivatives([_embed(alpha, active, d) for alpha in alphas], Y_nodes)
    coef = taylor_coefficients(derivs, alphas, local_nodes)
    keep = prune_mask(coef, PRUNE_SHARE * epsilon)
    kept = np.where(keep, coef, 0.0)

    radius = 0.5 if grid_n == 1 else 1.0 / grid_n
    degrees = np.array([sum(alpha) for alpha in alphas], dtype=np.float64)
    factorials = np.array([alpha_factorial(alpha) for alpha in alphas])
    bound_P = float(np.max(np.abs(derivs).T @ (radius ** degrees / factorials))) + PRUNE_SHARE * epsilon
    weight_sum = max(float(np.max(np.sum(np.abs(kept), axis=1))), 1e-300)

    needs_gadget = [bi for bi, beta in enumerate(alphas) if sum(beta) >= 2 and np.any(keep[:, bi])]
    mono_levels = 1
    if needs_gadget:
        mono_error = MONOMIAL_SHARE * epsilon / (weight_sum * max(1, p - 1))
        mono_levels = levels_for_error(mono_error, GADGET_MARGIN)
    monomials = _MonomialCache(builder, units, mono_levels)

    def local_poly(row: int) -> Affine:
        cols = np.flatnonzero(keep[row])
        return affine_sum([monomials.get(alphas[bi]) for bi in cols], [float(coef[row, bi]) for bi in cols])

    if grid_n == 1:
        net = builder.build([local_poly(0)])
        return net, MONOMIAL_SHARE * epsilon

    hats = [_emit_hats(builder, y, grid_n) for y in units]
    active_nodes = 2 ** d_a
    hat_levels = 1
    if d_a >= 2:
        hat_error = POU_SHARE * epsilon / (active_nodes * (d_a - 1) * max(bound_P, 1e-12))
        hat_levels = levels_for_error(hat_error, GADGET_MARGIN)
    bound_M = GADGET_MARGIN * max(1.0, bound_P)
    product_levels = levels_for_error(PRODUCT_SHARE * epsilon / active_nodes, bound_M)

    prefix: Dict[Tuple[int, ...], Affine] = {}

    def product_hat(index: Tuple[int, ...]) -> Affine:
        if len(index) == 1:
            return hats[0][index[0]]
        if index not in prefix:
            prefix[index] = emit_product(builder, product_hat(index[:-1]), hats[len(index) - 1][index[-1]],
                                         GADGET_MARGIN, levels=hat_levels)
        return prefix[index]

    terms = []
    for row, index in enumerate(product(range(grid_n + 1), repeat=d_a)):
        poly = local_poly(row)
        if poly.is_constant:
            if poly.const != 0.0:
                terms.append(product_hat(index) * poly.const)
            continue
        terms.append(emit_product(builder, product_hat(index), poly, bound_M, levels=product_levels))
    out = affine_sum(terms) if terms else builder.const(0.0)
    logger.debug(f"Izgara ağı: n={grid_n}, aktif={d_a}, seviyeler hat={hat_levels} çarpım={product_levels} tek-terim={mono_levels}")
    return builder.build([out]), (POU_SHARE + PRODUCT_SHARE + MONOMIAL_SHARE) * epsilon


def validation_points(target: SmoothTarget, grid_n: int, active: Sequence[int],
                      config: Optional[Settings] = None) -> np.ndarray:
    """d ≤ 3 için tensör kafes, aksi halde Sobol; düğümler her zaman dahil (özgün koordinatlar)"""
    cfg = config or settings
    d = target.dim
    if d <= 3:
        per_axis = min(20 * grid_n + 1, int(math.floor(cfg.validation_max_points ** (1.0 / d) + 1e-9)))
        ticks = np.linspace(0.0, 1.0, max(per_axis, 2))
        Y = np.array(list(product(ticks, repeat=d)))
    else:
        Y = sample_box(np.zeros(d), np.ones(d), 2 ** cfg.validation_qmc_log2, cfg.seed)
    Y = np.vstack([Y, _node_points(grid_n, active, d)])
    lo = np.asarray(target.lo, dtype=np.float64)
    hi = np.asarray(target.hi, dtype=np.float64)
    return lo + Y * (hi - lo)


def measure_error(target: SmoothTarget, net: Network, X: np.ndarray,
                  config: Optional[Settings] = None) -> float:
    """Noktalarda sup |f − R(Φ)|"""
    exact = np.asarray(target.evaluator(X), dtype=np.float64).reshape(-1)
    approx = net.realize(X, config)[:, 0]
    return float(np.max(np.abs(exact - approx)))


def approx_smooth(target: SmoothTarget, epsilon: float, config: Optional[Settings] = None,
                  bound_source: Optional[str] = None) -> Tuple[Network, ApproxCertificate]:
    """sup hatası ≤ ε olan ağ ve sertifikası"""
    cfg = config or settings
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"epsilon (0,1) aralığında olmalı: {epsilon}")
    bound_source = bound_source or cfg.bound_source

    probe = DerivativeProbe(target, cfg)
    plan = _plan(target, epsilon, probe, cfg, bound_source)
    grid_n = plan.grid_n
    warnings = list(plan.warnings)

    for refinement in range(cfg.max_refinements + 1):
        _check_nodes(grid_n, len(plan.active), cfg)
        net, mul_budget = _assemble(target, epsilon, plan, grid_n, probe, cfg)
        X = validation_points(target, grid_n, plan.active, cfg)
        try:
            measured = measure_error(target, net, X, cfg)
        except Exception as e:
            logger.error(f"Doğrulama hatası: {e}")
            raise
        if measured <= epsilon:
            break
        if refinement == cfg.max_refinements or not plan.active:
            logger.error(f"Sertifika başarısız: ölçülen {measured:.3g} > ε={epsilon:.3g}")
            raise CertificationError(f"'{target.name}' için ölçülen hata {measured:.3g} > ε={epsilon:.3g}",
                                     measured=measured, target=epsilon)
        previous = grid_n
        grid_n = 2 if grid_n == 1 else int(math.ceil(1.5 * grid_n))
        message = f"Ölçülen hata {measured:.3g} > ε, ızgara {previous} -> {grid_n}"
        logger.warning(message)
        warnings.append(message)

    certificate = ApproxCertificate(
        name=target.name, epsilon=epsilon, grid_n=grid_n, taylor_order=plan.order,
        requested_order=target.k - 1, mul_budget=mul_budget, size=net.size(), measured_error=measured,
        validation_points=int(X.shape[0]), active_axes=plan.active,
        remainder_constant=plan.remainder_constant, refinements=refinement,
        estimated=bound_source != "proof", warnings=warnings,
    )
    logger.info(f"Düzgün yaklaşım '{target.name}': d={target.dim}, aktif={plan.active}, p={plan.order}, "
                f"n={grid_n}, W={net.weights}, hata={measured:.3g}")
    return net, certificate


def approx_univariate_library(name: str, domain: Sequence[float], epsilon: float,
                              config: Optional[Settings] = None) -> Network:
    """exp / exp_neg için analitik kahinli yaklaşım"""
    if name not in UNIVARIATE_LIBRARY:
        raise ConfigError(f"Bilinmeyen tek değişkenli fonksiyon: {name}")
    lo, hi = (float(v) for v in domain)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigError(f"Tanım aralığı sonlu olmalı: [{lo}, {hi}]")
    if hi < lo:
        raise ConfigError(f"Tanım aralığı ters: [{lo}, {hi}]")
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"epsilon (0,1) aralığında olmalı: {epsilon}")
    if hi == lo:
        value = math.exp(lo if name == "exp" else -lo)
        builder = NetworkBuilder(1)
        return builder.build([builder.const(value)])
    target = smooth_target(name, 1, k=3, lo=[lo], hi=[hi])
    net, _ = approx_smooth(target, epsilon, config)
    return net
