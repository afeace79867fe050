"""
relu-transport - Transport Builder
Taşıma denklemi çözüm ağları: homojen, zayıf, kaynaklı, korunumlu ve sönümlü yapılar
"""

from itertools import product
from threading import Lock
from types import SimpleNamespace
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np

from ..core.config import settings, Settings
from ..core.errors import CapabilityError, ConfigError
from ..models.certificate_models import ApproxCertificate, BuildCertificate, ConstructionId
from ..models.network_models import MulConfig
from ..models.problem_models import InitialCondition, InitialKind, SmoothTarget, Variant, VectorFieldProblem
from ..utils.helpers import generate_hash
from .calculus import (
    duplication_net, gadget_constant_c2, multiply_nets, parallelize, scale_output, selector_net,
    sparse_concat, sum_nets,
)
from .characteristics import FlowMap, _columns, ensure_metadata, flow_domain, reference_solution
from .estimates import ck_bound, estimate_sup, hadamard_J_bound, initial_growth_bound, sample_box, symbolic_norms
from .network import Network
from .quadrature_net import riemann_net
from .smooth_approx import approx_smooth, approx_univariate_library

logger = logging.getLogger(__name__)

# Alt yaklaşımlar için tolerans üst sınırı (approx_smooth ε ∈ (0,1) ister)
MAX_SUB_DELTA = 0.5
TINY = 1e-12
GADGET_MARGIN = 1.01


def _sub_delta(value: float) -> float:
    return min(value, MAX_SUB_DELTA)


def _ceil(value: float) -> int:
    """Kayan nokta gürültüsüne dayanıklı tavan"""
    return max(1, int(math.ceil(value * (1.0 - 1e-12))))


class _FlowCache:
    """Son yığın için akış değerleri; bileşen hedefleri aynı ODE çözümünü paylaşır"""

    def __init__(self, flow_map: FlowMap, n: int, two_time: bool):
        self.flow_map = flow_map
        self.n = n
        self.two_time = two_time
        self._lock = Lock()
        self._key: Optional[str] = None
        self._value: Optional[np.ndarray] = None

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        Z = np.ascontiguousarray(Z, dtype=np.float64)
        key = f"{Z.shape}:{generate_hash(Z.tobytes())}"
        with self._lock:
            if key == self._key:
                return self._value
        offset = 1 if self.two_time else 0
        s = Z[:, 0] if self.two_time else np.zeros(Z.shape[0])
        t = Z[:, offset]
        x = Z[:, offset + 1:offset + 1 + self.n]
        eta = Z[:, offset + 1 + self.n:]
        value = self.flow_map.flow(s, t, x, eta)
        with self._lock:
            self._key, self._value = key, value
        return value

    def component(self, i: int):
        return lambda Z: self(Z)[:, i]


def _oracle_norm(oracle, lo, hi, k: int, seed: int) -> float:
    """Analitik kahinden max_{|α|≤k} sup|∂^α g| tahmini"""
    return symbolic_norms([SimpleNamespace(derivative=oracle)], lo, hi, k, seed)[k]


def u0_target(u0: InitialCondition, radius: float = 1.0) -> SmoothTarget:
    """Düzgün u₀ için [−R, R]ⁿ kutusunda yaklaşım hedefi"""
    if u0.kind != InitialKind.SMOOTH or u0.smoothness is None or u0.norm_bound is None:
        raise CapabilityError(f"u₀ '{u0.name}' için düzgünlük/norm metaverisi yok")
    return SmoothTarget(
        name=u0.name, dim=u0.n, lo=[-radius] * u0.n, hi=[radius] * u0.n, evaluator=u0.evaluator,
        k=u0.smoothness, norm_bound=u0.norm_bound, derivative_oracle=u0.derivative_oracle,
    )


def build_u0_net(u0: InitialCondition, delta: float, config: Optional[Settings] = None,
                 radius: float = 1.0) -> Network:
    """u₀ ağı: kesin ağ varsa doğrudan, düzgün u₀ için [−R, R]ⁿ kutusunda yaklaşım"""
    cfg = config or settings
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta (0,1) aralığında olmalı: {delta}")
    if u0.exact_net is not None:
        return u0.exact_net
    net, _ = approx_smooth(u0_target(u0, radius), delta, cfg)
    return net


def validation_lattice(problem: VectorFieldProblem, config: Optional[Settings] = None) -> np.ndarray:
    """[0,T] × K × [0,1]^D kafesi; büyükse ya da D > 2 ise Sobol noktaları"""
    cfg = config or settings
    lo, hi = flow_domain(problem)
    counts = [cfg.lattice_t] + [cfg.lattice_x] * problem.n + [cfg.lattice_eta] * problem.D
    if math.prod(counts) > cfg.lattice_cap or problem.D > 2:
        return sample_box(lo, hi, cfg.lattice_cap, cfg.seed)
    axes = [np.linspace(a, b, c) for a, b, c in zip(lo, hi, counts)]
    return np.array(list(product(*axes)), dtype=np.float64)


def measure_against_reference(problem: VectorFieldProblem, variant: Variant, net: Network,
                              config: Optional[Settings] = None,
                              flow_map: Optional[FlowMap] = None) -> Tuple[float, int]:
    """Kafeste sup |u − R(Φ)| ve nokta sayısı"""
    cfg = config or settings
    Z = validation_lattice(problem, cfg)
    n = problem.n
    reference = reference_solution(problem, variant, Z[:, 0], Z[:, 1:1 + n], Z[:, 1 + n:],
                                   flow_map or FlowMap(problem, cfg))
    approx = net.realize(Z, cfg)[:, 0]
    return float(np.max(np.abs(reference - approx))), int(Z.shape[0])


class TransportBuilder:
    """Tek problem için bileşik ağ kurucusu"""

    def __init__(self, problem: VectorFieldProblem, epsilon: float, config: Optional[Settings] = None):
        if not 0.0 < epsilon < 1.0:
            raise ConfigError(f"epsilon (0,1) aralığında olmalı: {epsilon}")
        self.config = config or settings
        self.problem = ensure_metadata(problem, self.config)
        self.epsilon = epsilon
        self.bound_source = self.config.bound_source
        self.flow_map = FlowMap(self.problem, self.config)
        self.G0 = initial_growth_bound(self.problem.K_radius, self.problem.growth_C, self.problem.T)
        self.T_hat = max(self.problem.T, 1.0)
        self.estimated = list(self.problem.estimated)
        self.warnings: List[str] = []
        self.sub_sizes: Dict[str, Network] = {}
        self.constants: Dict[str, float] = {"G0": self.G0}
        if self.bound_source == "estimated":
            self.estimated.append("flow_derivatives")

    # Alt ağlar

    def _flow_norm_bound(self) -> float:
        try:
            return ck_bound(self.problem, self.problem.k)["Gk"]
        except CapabilityError:
            return max(self.G0, TINY)

    def _G1(self) -> float:
        try:
            return ck_bound(self.problem, 1)["G1"]
        except CapabilityError:
            self.warnings.append("‖V‖_{C¹} yok, G1 yerine G0 kullanıldı")
            return self.G0

    def flow_net(self, delta: float, two_time: bool = False) -> Tuple[Network, List[ApproxCertificate]]:
        """X̃ = X(0,·,·,·) ya da iki zamanlı X(s,t,x,η); n > 1 için bileşen başına δ/√n"""
        p = self.problem
        lo, hi = flow_domain(p)
        if two_time:
            lo, hi = [0.0] + lo, [p.T] + hi
        cache = _FlowCache(self.flow_map, p.n, two_time)
        per_component = _sub_delta(delta / math.sqrt(p.n))
        norm_bound = self._flow_norm_bound()
        nets, certificates = [], []
        for i in range(p.n):
            target = SmoothTarget(
                name=f"X{i}" + ("(s,t)" if two_time else ""), dim=len(lo), lo=lo, hi=hi,
                evaluator=cache.component(i), k=p.k, norm_bound=norm_bound,
                noise_level=max(self.config.ode_rtol, np.finfo(np.float64).eps),
            )
            net, certificate = approx_smooth(target, per_component, self.config, self.bound_source)
            nets.append(net)
            certificates.append(certificate)
            self.warnings.extend(certificate.warnings)
        return parallelize(nets), certificates

    def u0_net(self, delta: float, flow_delta: float) -> Network:
        """B_{G0+δ} topunu kapsayan kutuda u₀"""
        return build_u0_net(self.problem.u0, _sub_delta(delta), self.config, radius=self.G0 + flow_delta)

    def homogeneous_part(self, delta1: float, delta2: float) -> Network:
        """Φ^{u₀,δ₁} ⊙ Φ^{X̃,δ₂}"""
        delta2 = _sub_delta(delta2)
        x_net, _ = self.flow_net(delta2)
        u_net = self.u0_net(delta1, delta2)
        self.sub_sizes["u0"] = u_net
        self.sub_sizes["flow"] = x_net
        return sparse_concat(u_net, x_net)

    def _scalar_net(self, name: str, delta: float, flow_delta: float) -> Network:
        """f veya a için (τ, y, η) kutusunda yaklaşım; y ∈ [−G0 − δ, G0 + δ]ⁿ"""
        p = self.problem
        handle = getattr(p, name)
        oracle = getattr(p, f"{name}_oracle")
        k = getattr(p, f"{name}_smoothness") or p.k
        radius = self.G0 + flow_delta
        lo = [0.0] + [-radius] * p.n + [0.0] * p.D
        hi = [p.T] + [radius] * p.n + [1.0] * p.D
        if oracle is not None:
            norm_bound = _oracle_norm(oracle, lo, hi, k, self.config.seed)
        else:
            norm_bound = max(p.sup[name], p.lip[name])
        target = SmoothTarget(name=name, dim=len(lo), lo=lo, hi=hi, evaluator=_columns(handle, p.n), k=k,
                              norm_bound=max(norm_bound, TINY), derivative_oracle=oracle)
        net, certificate = approx_smooth(target, _sub_delta(delta), self.config, self.bound_source)
        self.warnings.extend(certificate.warnings)
        return net

    def integral_part(self, name: str, N: int, delta_g: float, delta_x: float) -> Network:
        """∫₀ᵗ g(τ, X(τ,t,x,η), η) dτ ağı: Ĩ_N(Φ^g ⊙ P(Φ_τ, Φ^X, Φ_η)) ⊙ Ã, ardından ×T"""
        p = self.problem
        delta_x = _sub_delta(delta_x)
        x_net, _ = self.flow_net(delta_x, two_time=True)
        dim = 2 + p.n + p.D
        parts = [selector_net(dim, [0]), x_net]
        if p.D:
            parts.append(selector_net(dim, range(2 + p.n, dim)))
        full = parallelize(parts)
        g_net = self._scalar_net(name, delta_g, delta_x)
        composed = sparse_concat(g_net, full)
        a_bar = p.sup[name] + delta_g + p.lip[name] * delta_x
        integral, riemann = riemann_net(composed, N, p.T, a_bar)
        self.constants["a_bar"] = riemann.a_bar
        self.sub_sizes[f"{name}_integrand"] = composed
        self.sub_sizes["quadrature"] = integral
        return scale_output(sparse_concat(integral, duplication_net(p.n, p.D)), p.T)

    # Sertifika

    def certify(self, construction: ConstructionId, variant: Variant, net: Network,
                deltas: Dict[str, float], ledger: Dict[str, float], N: Optional[int] = None,
                mul_c2: Optional[float] = None) -> BuildCertificate:
        p = self.problem
        try:
            measured, points = measure_against_reference(p, variant, net, self.config, self.flow_map)
        except Exception as e:
            logger.error(f"Doğrulama başarısız: {e}")
            raise
        passed = measured <= self.epsilon
        if not passed:
            logger.warning(f"{construction.value}: ölçülen hata {measured:.3g} > ε={self.epsilon:.3g}")
        certificate = BuildCertificate(
            construction_id=construction, epsilon=self.epsilon, deltas=deltas, N=N,
            domain={"T": p.T, "K_lo": list(p.K_lo), "K_hi": list(p.K_hi), "D": p.D},
            sub_sizes={key: sub.size() for key, sub in self.sub_sizes.items()}, total=net.size(),
            constants_used=self.constants, estimated=sorted(set(self.estimated)),
            bound_source=self.bound_source, ledger=ledger, ledger_sum=float(sum(ledger.values())),
            mul_c2=mul_c2, measured_sup_error=measured, validation_points=points, passed=passed,
            warnings=list(dict.fromkeys(self.warnings)),
        )
        logger.info(f"{construction.value}: ε={self.epsilon}, W={net.weights}, L={net.depth}, "
                    f"hata={measured:.3g}, geçti={passed}")
        return certificate

    # Yapılar

    def homogeneous(self, construction: ConstructionId) -> Tuple[Network, BuildCertificate]:
        """u = u₀(X̃): δ₁ = ε/2, δ₂ = ε/(2 Lip)"""
        eps = self.epsilon
        lip = self.problem.lip["u0"]
        if construction == ConstructionId.STRONG and self.problem.u0.kind != InitialKind.SMOOTH:
            self.warnings.append("u₀ C¹ değil; transport-weak yapısı uygundur")
        delta1 = eps / 2.0
        delta2 = eps / (2.0 * lip) if lip > 0 else MAX_SUB_DELTA
        net = self.homogeneous_part(delta1, delta2)
        self.constants["lip_u0"] = lip
        ledger = {"u0": delta1, "flow": lip * _sub_delta(delta2)}
        variant = Variant.WEAK if construction == ConstructionId.WEAK else Variant.HOMOGENEOUS
        return net, self.certify(construction, variant, net, {"delta1": delta1, "delta2": delta2}, ledger)

    def source(self) -> Tuple[Network, BuildCertificate]:
        """u = u₀(X̃) + ∫₀ᵗ f; altı terimli defter"""
        p = self.problem
        if p.f is None:
            raise CapabilityError("transport-source için f gerekli")
        eps, T_hat = self.epsilon, self.T_hat
        lip, lip_f, sup_f = p.lip["u0"], p.lip["f"], p.sup["f"]
        G1 = self._G1()
        f_X = max(sup_f, lip_f * (1.0 + G1))
        delta1 = eps / 6.0
        delta2 = eps / (12.0 * max(lip, lip_f * T_hat, TINY))
        delta3 = eps / (12.0 * T_hat)
        N = _ceil(15.0 * T_hat / eps * max(f_X, 1.0 + sup_f))
        self.estimated.append("fX_norm")

        homogeneous = self.homogeneous_part(delta1, delta2)
        anti = self.integral_part("f", N, delta3, delta2)
        net = sum_nets(homogeneous, anti)

        d2 = _sub_delta(delta2)
        a_bar = self.constants["a_bar"]
        self.constants.update({"lip_u0": lip, "lip_f": lip_f, "sup_f": sup_f, "G1": G1, "fX_norm": f_X})
        ledger = {
            "u0": delta1,
            "flow_u0": lip * d2,
            "flow_source": T_hat * lip_f * d2,
            "source": T_hat * delta3,
            "quadrature": T_hat * (3.0 * a_bar + 2.0 * f_X) / N,
        }
        deltas = {"delta1": delta1, "delta2": delta2, "delta3": delta3}
        return net, self.certify(ConstructionId.SOURCE, Variant.SOURCE, net, deltas, ledger, N=N)

    def _jacobian_bound(self) -> float:
        p = self.problem
        if self.bound_source == "proof":
            return hadamard_J_bound(p)
        lo, hi = flow_domain(p)
        n = p.n

        def J(Z):
            return self.flow_map.jacobian_factor(np.zeros(Z.shape[0]), Z[:, 0], Z[:, 1:1 + n], Z[:, 1 + n:])

        self.estimated.append("G_J")
        return max(estimate_sup(J, lo, hi, self.config.model_copy(update={"lipschitz_samples": 4096})), TINY)

    def conservative(self) -> Tuple[Network, BuildCertificate]:
        """u = u₀(X̃)·J ; dört çeyrek defter"""
        p = self.problem
        if p.k < 2:
            raise CapabilityError("transport-conservative k ≥ 2 gerektirir (J ∈ C^{k−1})")
        if p.div_V is None:
            raise CapabilityError("transport-conservative için div V gerekli")
        eps = self.epsilon
        lip, sup_u0 = p.lip["u0"], p.sup["u0"]
        G_J = self._jacobian_bound()
        delta1 = eps / (8.0 * G_J)
        delta2 = eps / (8.0 * lip * G_J) if lip > 0 else MAX_SUB_DELTA
        delta3 = eps / (4.0 * sup_u0) if sup_u0 > 0 else MAX_SUB_DELTA
        d1, d2, d3 = (_sub_delta(v) for v in (delta1, delta2, delta3))

        u_part = self.homogeneous_part(delta1, delta2)
        lo, hi = flow_domain(p)
        n = p.n

        def J(Z):
            return self.flow_map.jacobian_factor(np.zeros(Z.shape[0]), Z[:, 0], Z[:, 1:1 + n], Z[:, 1 + n:])

        J_norm = G_J if self.bound_source == "estimated" else max(G_J, self._flow_norm_bound())
        target = SmoothTarget(name="J", dim=len(lo), lo=lo, hi=hi, evaluator=J, k=p.k - 1, norm_bound=J_norm,
                              noise_level=max(self.config.ode_rtol, np.finfo(np.float64).eps))
        J_net, J_cert = approx_smooth(target, d3, self.config, self.bound_source)
        self.warnings.extend(J_cert.warnings)
        self.sub_sizes["jacobian"] = J_net

        mul = MulConfig(epsilon=eps / 4.0, bound_M=GADGET_MARGIN * max(sup_u0 + eps / 4.0, G_J + d3))
        net = multiply_nets(u_part, J_net, mul)
        self.constants.update({"lip_u0": lip, "sup_u0": sup_u0, "G_J": G_J, "bound_M": mul.bound_M})
        ledger = {
            "u0": G_J * d1,
            "flow": G_J * lip * d2,
            "jacobian": sup_u0 * d3,
            "gadget": eps / 4.0,
            "cross": eps / 4.0,
        }
        deltas = {"delta1": delta1, "delta2": delta2, "delta3": delta3, "mul": eps / 4.0}
        return net, self.certify(ConstructionId.CONSERVATIVE, Variant.CONSERVATIVE, net, deltas, ledger,
                                 mul_c2=gadget_constant_c2(mul))

    def damped(self) -> Tuple[Network, BuildCertificate]:
        """u = u₀(X̃)·exp(−∫₀ᵗ a)"""
        p = self.problem
        if p.a is None:
            raise CapabilityError("transport-damped için a gerekli")
        eps, T, T_hat = self.epsilon, p.T, self.T_hat
        lip, sup_u0 = p.lip["u0"], p.sup["u0"]
        lip_a, sup_a = p.lip["a"], p.sup["a"]
        A_plus = max(p.sup.get("max_a", sup_a), 0.0)
        A_minus = max(-p.sup.get("min_a", -sup_a), 0.0)

        # Üstel çarpan payı e_E = ε_exp + e^{hi}·e_I
        e_E = 0.4 * eps / max(1.0, sup_u0)
        eps_exp = e_E / 4.0
        e_I = (0.75 * e_E) / math.exp(A_minus * T + 0.75 * e_E)
        e_q = 0.75 * e_I
        delta_a = e_I / (8.0 * T_hat)
        delta_x = e_I / (8.0 * T_hat * lip_a) if lip_a > 0 else MAX_SUB_DELTA
        G1 = self._G1()
        a_X = max(sup_a, lip_a * (1.0 + G1))
        N = _ceil(5.0 * T_hat / e_q * max(a_X, 1.0 + sup_a))

        E_max = math.exp(A_minus * T) + e_E
        e_u = (eps / 4.0) / E_max
        delta1 = e_u / 2.0
        delta2 = e_u / (2.0 * lip) if lip > 0 else MAX_SUB_DELTA

        u_part = self.homogeneous_part(delta1, delta2)
        neg_integral = scale_output(self.integral_part("a", N, delta_a, delta_x), -1.0)
        exp_net = approx_univariate_library("exp", [-A_plus * T - e_I, A_minus * T + e_I], eps_exp, self.config)
        E_net = sparse_concat(exp_net, neg_integral)
        self.sub_sizes["exp"] = exp_net
        self.sub_sizes["damping_factor"] = E_net

        mul = MulConfig(epsilon=eps / 4.0, bound_M=GADGET_MARGIN * max(sup_u0 + eps / 4.0, E_max))
        net = multiply_nets(u_part, E_net, mul)
        self.estimated.append("aX_norm")
        self.constants.update({"lip_u0": lip, "sup_u0": sup_u0, "lip_a": lip_a, "sup_a": sup_a,
                               "A_plus": A_plus, "A_minus": A_minus, "G1": G1, "aX_norm": a_X,
                               "bound_M": mul.bound_M})
        ledger = {
            "homogeneous": E_max * (_sub_delta(delta1) + lip * _sub_delta(delta2)),
            "exp_factor": sup_u0 * e_E,
            "gadget": eps / 4.0,
        }
        deltas = {"delta1": delta1, "delta2": delta2, "e_E": e_E, "eps_exp": eps_exp, "e_I": e_I,
                  "e_q": e_q, "delta_a": delta_a, "delta_x": delta_x, "mul": eps / 4.0}
        return net, self.certify(ConstructionId.DAMPED, Variant.DAMPED, net, deltas, ledger, N=N,
                                 mul_c2=gadget_constant_c2(mul))


def build_homogeneous(problem: VectorFieldProblem, epsilon: float,
                      config: Optional[Settings] = None) -> Tuple[Network, BuildCertificate]:
    """Homojen denklem, C¹ başlangıç koşulu"""
    return TransportBuilder(problem, epsilon, config).homogeneous(ConstructionId.STRONG)


def build_weak(problem: VectorFieldProblem, epsilon: float,
               config: Optional[Settings] = None) -> Tuple[Network, BuildCertificate]:
    """Homojen denklem, Lipschitz başlangıç koşulu"""
    return TransportBuilder(problem, epsilon, config).homogeneous(ConstructionId.WEAK)


def build_source(problem: VectorFieldProblem, epsilon: float,
                 config: Optional[Settings] = None) -> Tuple[Network, BuildCertificate]:
    return TransportBuilder(problem, epsilon, config).source()


def build_conservative(problem: VectorFieldProblem, epsilon: float,
                       config: Optional[Settings] = None) -> Tuple[Network, BuildCertificate]:
    return TransportBuilder(problem, epsilon, config).conservative()


def build_damped(problem: VectorFieldProblem, epsilon: float,
                 config: Optional[Settings] = None) -> Tuple[Network, BuildCertificate]:
    return TransportBuilder(problem, epsilon, config).damped()


BUILDERS = {
    Variant.HOMOGENEOUS: build_homogeneous,
    Variant.WEAK: build_weak,
    Variant.SOURCE: build_source,
    Variant.CONSERVATIVE: build_conservative,
    Variant.DAMPED: build_damped,
}
