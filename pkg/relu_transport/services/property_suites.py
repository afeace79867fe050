"""
relu-transport - Property Suites
Kesin cebir ve akış özelliklerinin rastgele örneklerle denetimi
"""

from typing import Callable, Dict, List, Optional, Sequence
import logging
import math

import numpy as np

from ..core.config import settings, Settings
from ..core.errors import ConfigError
from ..models.experiment_models import PropertyCheck, PropertyReport
from ..models.network_models import MulConfig
from ..models.problem_models import VectorFieldProblem
from .calculus import concat_weights, mul_gadget_net, multiply_nets, parallelize, product_weight_bound, sparse_concat, sum_nets
from .characteristics import FlowMap
from .estimates import initial_growth_bound
from .fields import FieldSpec, const_field, inline_field, linear_field, param_shear_field, ramp_initial, rotation_field
from .graph_builder import NetworkBuilder
from .network import random_network
from .quadrature_net import clip_net, riemann_net

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-12
FLOW_TOL = 1e-7
LIOUVILLE_TOL = 1e-5


def _record(report: PropertyReport, name: str, passed: bool, detail: str = "") -> None:
    report.checks.append(PropertyCheck(name=name, passed=bool(passed), detail=detail))
    if not passed:
        logger.warning(f"[{report.suite}] {name} başarısız: {detail}")


def calculus_suite(pairs: int = 200, seed: int = 0) -> PropertyReport:
    """Rastgele ağ çiftlerinde ⊙, P ve ⊕ kahinleri ile boyut sınırları"""
    rng = np.random.default_rng(seed)
    report = PropertyReport(suite="calculus")
    worst = {"concat": 0.0, "parallel": 0.0, "sum": 0.0}
    bounds = {"concat": True, "parallel": True, "sum": True}

    for _ in range(pairs):
        d, m = (int(v) for v in rng.integers(1, 4, size=2))
        inner = random_network(rng, d, m, int(rng.integers(1, 4)))
        outer = random_network(rng, m, 1, int(rng.integers(1, 4)))
        other = random_network(rng, d, 1, int(rng.integers(1, 4)))
        X = rng.normal(size=(64, d))

        comp = sparse_concat(outer, inner)
        worst["concat"] = max(worst["concat"], float(np.max(np.abs(comp.realize(X) - outer.realize(inner.realize(X))))))
        bounds["concat"] &= comp.depth == outer.depth + inner.depth
        bounds["concat"] &= comp.weights == concat_weights(outer, inner) <= 2 * outer.weights + 2 * inner.weights

        par = parallelize([inner, other])
        stacked = np.hstack([inner.realize(X), other.realize(X)])
        worst["parallel"] = max(worst["parallel"], float(np.max(np.abs(par.realize(X) - stacked))))
        bounds["parallel"] &= par.depth == max(inner.depth, other.depth)
        bounds["parallel"] &= par.weights == inner.weights + other.weights

        total = sum_nets(comp, other)
        expected = comp.realize(X)[:, 0] + other.realize(X)[:, 0]
        worst["sum"] = max(worst["sum"], float(np.max(np.abs(total.realize(X)[:, 0] - expected))))
        bounds["sum"] &= total.weights <= comp.weights + other.weights

    for key in ("concat", "parallel", "sum"):
        _record(report, f"{key}_oracle", worst[key] <= ORACLE_TOL, f"max sapma {worst[key]:.3g}")
        _record(report, f"{key}_size", bounds[key], "L ve W sınırları")

    A = random_network(rng, 2, 1, 2)
    B = random_network(rng, 2, 2, 3)
    C = random_network(rng, 2, 2, 2)
    X = rng.normal(size=(100, 2))
    gap = float(np.max(np.abs(sparse_concat(sparse_concat(A, B), C).realize(X)
                              - sparse_concat(A, sparse_concat(B, C)).realize(X))))
    _record(report, "concat_associative", gap <= ORACLE_TOL, f"max sapma {gap:.3g}")
    return report


def multiplication_suite(epsilons: Sequence[float] = (1e-1, 1e-2, 1e-3), bound_M: float = 2.0,
                         grid: int = 201) -> PropertyReport:
    """×^{ε,M}: ızgarada hata ≤ ε ve W'nin ln(1/ε) içinde afin büyümesi"""
    report = PropertyReport(suite="multiplication")
    axis = np.linspace(-bound_M, bound_M, grid)
    X, Y = np.meshgrid(axis, axis)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    weights = []
    for eps in epsilons:
        gadget = mul_gadget_net(MulConfig(epsilon=eps, bound_M=bound_M))
        err = float(np.max(np.abs(gadget.realize(pts)[:, 0] - pts[:, 0] * pts[:, 1])))
        _record(report, f"gadget_error_{eps:g}", err <= eps, f"sup hata {err:.3g}, W={gadget.weights}")
        weights.append(gadget.weights)

    x = np.log(1.0 / np.asarray(epsilons, dtype=np.float64))
    W = np.asarray(weights, dtype=np.float64)
    slope, intercept = np.polyfit(x, W, 1)
    rms = float(np.sqrt(np.mean((W - (slope * x + intercept)) ** 2)))
    relative = rms / max(W.max() - W.min(), 1.0)
    _record(report, "weights_affine_in_log", relative < 0.05, f"eğim {slope:.3g}, göreli artık {relative:.3g}")

    rng = np.random.default_rng(0)
    within = True
    for eps in epsilons:
        cfg = MulConfig(epsilon=eps, bound_M=bound_M)
        for _ in range(5):
            phi1 = random_network(rng, 2, 1, int(rng.integers(1, 4)))
            phi2 = random_network(rng, 2, 1, int(rng.integers(1, 4)))
            within &= multiply_nets(phi1, phi2, cfg).weights <= product_weight_bound(phi1, phi2, cfg)
    _record(report, "product_size", bool(within), "W ≤ c₁ ln(1/ε) + c₂ + 2W₁ + 2W₂")
    return report


def quadrature_suite(nodes: Sequence[int] = (4, 16, 64), samples: int = 1000) -> PropertyReport:
    """Φ ≡ 1 için Riemann ağı ve kırpma alt ağlarının özellikleri"""
    report = PropertyReport(suite="quadrature")
    builder = NetworkBuilder(1)
    one = builder.build([builder.const(1.0)])
    t = np.linspace(0.0, 1.0, samples)
    for N in nodes:
        net, cert = riemann_net(one, N, 1.0, 1.0)
        gap = float(np.max(np.abs(net.realize(t[:, None])[:, 0] - np.ceil(t * N) / N)))
        _record(report, f"riemann_constant_N{N}", gap <= cert.c3 / N, f"sapma {gap:.3g}, sınır {cert.c3 / N:.3g}")

    rng = np.random.default_rng(0)
    N, i = 8, 3
    phi = random_network(rng, 2, 1, 3)
    x = np.linspace(-1.0, 1.0, 41)
    t_i, t_next = i / N, (i + 1) / N
    frozen = phi.realize(np.column_stack([np.full(41, t_i), x]))[:, 0]
    a_bar = float(np.max(np.abs(frozen))) + 1e-9
    clip = clip_net(phi, i, N, 1.0, a_bar)

    def at(time: float) -> np.ndarray:
        return clip.realize(np.column_stack([np.full(41, time), x]))[:, 0]

    below = max(float(np.max(np.abs(at(s)))) for s in (0.0, t_i))
    above = max(float(np.max(np.abs(at(s) - frozen))) for s in (t_next, 1.0))
    between = max(float(np.max(np.abs(at(s)))) for s in np.linspace(t_i, t_next, 9))
    _record(report, "clip_zero_below", below <= ORACLE_TOL, f"{below:.3g}")
    _record(report, "clip_frozen_above", above <= ORACLE_TOL, f"{above:.3g}")
    _record(report, "clip_bounded_between", between <= 2.0 * a_bar + ORACLE_TOL, f"{between:.3g} ≤ 2ā")
    return report


def _problem(spec: FieldSpec, K: float = 2.0, T: float = 1.0) -> VectorFieldProblem:
    n = spec.n
    G0 = initial_growth_bound(K * math.sqrt(n), spec.growth_C, T)
    return VectorFieldProblem(
        name=spec.name, n=n, D=spec.D, T=T, V=spec.V, div_V=spec.div_V, u0=ramp_initial(n),
        growth_C=spec.growth_C, ck_norms=spec.norms(G0, 3), K_lo=[-K] * n, K_hi=[K] * n,
    )


def flow_suite(samples: int = 1000, seed: int = 0, config: Optional[Settings] = None) -> PropertyReport:
    """Yarıgrup, ters tutarlılık, G0 sınırı ve Liouville özdeşliği"""
    cfg = (config or settings).model_copy(update={"ode_atol": 1e-12, "ode_rtol": 1e-10})
    rng = np.random.default_rng(seed)
    report = PropertyReport(suite="flow")
    fields = [const_field(1, 1, [0.5]), linear_field(1, 1), rotation_field(2, 1), param_shear_field(1, 2)]

    for spec in fields:
        problem = _problem(spec)
        fm = FlowMap(problem, cfg)
        s1, s2, t = (rng.uniform(0.0, problem.T, samples) for _ in range(3))
        x = rng.uniform(problem.K_lo, problem.K_hi, size=(samples, problem.n))
        eta = rng.uniform(0.0, 1.0, size=(samples, problem.D))
        zero = np.zeros(samples)

        direct = fm.flow(s2, t, x, eta)
        chained = fm.flow(s2, s1, fm.flow(s1, t, x, eta), eta)
        gap = float(np.max(np.abs(direct - chained)))
        _record(report, f"semigroup_{spec.name}", gap <= FLOW_TOL, f"{gap:.3g}")

        back = fm.flow(t, zero, fm.flow(zero, t, x, eta), eta)
        gap = float(np.max(np.abs(back - x)))
        _record(report, f"inverse_{spec.name}", gap <= FLOW_TOL, f"{gap:.3g}")

        G0 = initial_growth_bound(problem.K_radius, problem.growth_C, problem.T)
        largest = float(np.max(np.linalg.norm(fm.flow(s1, t, x, eta), axis=1)))
        _record(report, f"growth_{spec.name}", largest <= G0, f"max |X| = {largest:.4g}, G0 = {G0:.4g}")

    inline = inline_field(["sin(x0) + 0.3*x1", "0.5*x0*x1/(1 + x0**2)"], 2, 0, 1.0, [-1.0, -1.0], [1.0, 1.0])
    for spec in (linear_field(1, 0), rotation_field(2, 0), inline):
        problem = _problem(spec, K=1.0)
        fm = FlowMap(problem, cfg)
        count = min(samples, 200)
        s, t = rng.uniform(0.0, 1.0, count), rng.uniform(0.0, 1.0, count)
        x = rng.uniform(problem.K_lo, problem.K_hi, size=(count, problem.n))
        eta = np.zeros((count, 0))
        gap = float(np.max(np.abs(fm.jacobian_factor(s, t, x, eta) - fm.jacobian_fd(s, t, x, eta))))
        _record(report, f"liouville_{spec.name}", gap <= LIOUVILLE_TOL, f"{gap:.3g}")
    return report


SUITES: Dict[str, Callable[..., PropertyReport]] = {
    "calculus": calculus_suite,
    "multiplication": multiplication_suite,
    "quadrature": quadrature_suite,
    "flow": flow_suite,
}

# Kesin cebir takımları; sweep çıkış kodu bunlara da bağlı
EXACT_SUITES = ("calculus", "quadrature")


def run_suites(names: Optional[Sequence[str]] = None, seed: int = 0,
               config: Optional[Settings] = None) -> List[PropertyReport]:
    """İstenen takımları sırayla çalıştır"""
    names = list(names) if names else list(SUITES)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ConfigError(f"Bilinmeyen özellik takımı: {', '.join(unknown)}")
    reports = []
    for name in names:
        if name == "flow":
            report = flow_suite(seed=seed, config=config)
        elif name == "calculus":
            report = calculus_suite(seed=seed)
        else:
            report = SUITES[name]()
        logger.info(f"[{name}] {sum(c.passed for c in report.checks)}/{len(report.checks)} kontrol geçti")
        reports.append(report)
    return reports
