"""
relu-transport - Characteristics
Karakteristik akış X(s,t,x,η), Liouville Jacobian çarpanı J ve referans çözümler
"""

from typing import Dict, Optional, Sequence, Tuple
import logging

import numpy as np

from ..core.config import settings, Settings
from ..core.errors import CapabilityError, ConfigError
from ..models.experiment_models import ExperimentConfig
from ..models.problem_models import InitialCondition, Variant, VectorFieldProblem
from .estimates import estimate_lipschitz, estimate_sup, initial_growth_bound, sample_box
from .fields import (
    SymbolicFunction, builtin_field, inline_field, make_symbols, parse_expression,
    piecewise_initial, ramp_initial, smooth_initial, txeta_handle,
)
from .integrator import CashKarpIntegrator

logger = logging.getLogger(__name__)


class FlowMap:
    """X(s,t,x,η) ve artırılmış integraller için sayısal erişim"""

    def __init__(self, problem: VectorFieldProblem, config: Optional[Settings] = None,
                 allow_fd_fallback: bool = False):
        self.problem = problem
        self.config = config or settings
        self.allow_fd_fallback = allow_fd_fallback
        self.integrator = CashKarpIntegrator(self.config)

    def _prepare(self, s, t, x, eta) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, bool]:
        n, D = self.problem.n, self.problem.D
        x = np.asarray(x, dtype=np.float64)
        single = x.size == n and np.ndim(s) == 0 and np.ndim(t) == 0
        x = x.reshape(-1, n)
        points = max(x.shape[0], np.size(s), np.size(t))
        x = np.broadcast_to(x, (points, n))
        s = np.broadcast_to(np.asarray(s, dtype=np.float64).ravel(), (points,))
        t = np.broadcast_to(np.asarray(t, dtype=np.float64).ravel(), (points,))
        if D:
            eta = np.broadcast_to(np.asarray(eta, dtype=np.float64).reshape(-1, D), (points, D))
        else:
            eta = np.zeros((points, 0))
        return s, t, x, eta, single

    def _rhs(self, extras: Sequence[str]):
        p = self.problem
        handles = []
        for name in extras:
            handle = {"div": p.div_V, "f": p.f, "a": p.a}[name]
            if handle is None:
                raise CapabilityError(f"Artırılmış integral için '{name}' alanı yok")
            handles.append(handle)
        n = p.n

        def rhs(tau, state, eta):
            x = state[:, :n]
            columns = [p.V(tau, x, eta)]
            columns += [np.asarray(h(tau, x, eta), dtype=np.float64).reshape(-1, 1) for h in handles]
            return np.hstack(columns)

        return rhs

    def flow_with_integrals(self, s, t, x, eta=None, extras: Sequence[str] = ()) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """X(s,t,x,η) ve ∫_t^s g(τ, X(τ), η) dτ integralleri (g ∈ extras)"""
        s, t, x, eta, single = self._prepare(s, t, x, eta)
        rhs = self._rhs(extras)
        n = self.problem.n
        chunk = max(1, self.config.flow_batch_points)
        out = np.empty((x.shape[0], n + len(extras)))
        for start in range(0, x.shape[0], chunk):
            sl = slice(start, start + chunk)
            y0 = np.hstack([x[sl], np.zeros((x[sl].shape[0], len(extras)))])
            try:
                out[sl] = self.integrator.integrate(rhs, y0, s[sl], t[sl], eta[sl])
            except Exception as e:
                logger.error(f"Akış integrasyonu hatası: {e}")
                raise
        X = out[:, :n]
        integrals = {name: out[:, n + i] for i, name in enumerate(extras)}
        if single:
            return X[0], {name: value[0] for name, value in integrals.items()}
        return X, integrals

    def flow(self, s, t, x, eta=None) -> np.ndarray:
        """X(s,t,x,η)"""
        X, _ = self.flow_with_integrals(s, t, x, eta)
        return X

    def jacobian_fd(self, s, t, x, eta=None, h: float = 1e-5) -> np.ndarray:
        """det D_x X, merkezi farklarla"""
        s, t, x, eta, single = self._prepare(s, t, x, eta)
        n = self.problem.n
        points = x.shape[0]
        stencil = [x + h * e for e in np.eye(n)] + [x - h * e for e in np.eye(n)]
        Y = self.flow(np.tile(s, 2 * n), np.tile(t, 2 * n), np.vstack(stencil), np.tile(eta, (2 * n, 1)))
        Y = Y.reshape(2 * n, points, n)
        jac = np.empty((points, n, n))
        for j in range(n):
            jac[:, :, j] = (Y[j] - Y[n + j]) / (2.0 * h)
        det = np.linalg.det(jac)
        return det[0] if single else det

    def jacobian_factor(self, s, t, x, eta=None) -> np.ndarray:
        """J = exp(∫_t^s div V); div V yoksa isteğe bağlı fark yedeği"""
        if self.problem.div_V is None:
            if not self.allow_fd_fallback:
                raise CapabilityError("div_V yok ve sonlu fark yedeği kapalı")
            logger.warning("div_V yok, sonlu fark determinantı kullanılıyor")
            return self.jacobian_fd(s, t, x, eta)
        _, integrals = self.flow_with_integrals(s, t, x, eta, ("div",))
        return np.exp(integrals["div"])


def reference_solution(problem: VectorFieldProblem, variant: Variant, t, x, eta=None,
                       flow_map: Optional[FlowMap] = None) -> np.ndarray:
    """Karakteristik yöntemiyle referans çözüm"""
    fm = flow_map or FlowMap(problem)
    variant = Variant(variant)
    zero = np.zeros_like(np.asarray(t, dtype=np.float64))
    n = problem.n

    def u0_at(X0):
        return problem.u0.evaluator(np.asarray(X0).reshape(-1, n))

    if variant in (Variant.HOMOGENEOUS, Variant.WEAK):
        values = u0_at(fm.flow(zero, t, x, eta))
    elif variant == Variant.SOURCE:
        if problem.f is None:
            raise CapabilityError("source varyantı f gerektirir")
        X0, integrals = fm.flow_with_integrals(zero, t, x, eta, ("f",))
        values = u0_at(X0) - integrals["f"]
    elif variant == Variant.CONSERVATIVE:
        if problem.div_V is not None:
            X0, integrals = fm.flow_with_integrals(zero, t, x, eta, ("div",))
            values = u0_at(X0) * np.exp(integrals["div"])
        else:
            values = u0_at(fm.flow(zero, t, x, eta)) * fm.jacobian_factor(zero, t, x, eta)
    elif variant == Variant.DAMPED:
        if problem.a is None:
            raise CapabilityError("damped varyantı a gerektirir")
        X0, integrals = fm.flow_with_integrals(zero, t, x, eta, ("a",))
        values = u0_at(X0) * np.exp(integrals["a"])
    else:
        raise ConfigError(f"Referans çözüm tanımsız: {variant.value}")
    values = np.asarray(values, dtype=np.float64).ravel()
    single = np.ndim(t) == 0 and np.size(x) == n
    return values[0] if single else values


def flow_domain(problem: VectorFieldProblem) -> Tuple[list, list]:
    """[0,T] × K × [0,1]^D kutusu"""
    lo = [0.0] + list(problem.K_lo) + [0.0] * problem.D
    hi = [problem.T] + list(problem.K_hi) + [1.0] * problem.D
    return lo, hi


def source_domain(problem: VectorFieldProblem) -> Tuple[list, list]:
    """[0,T] × B_G0 kutusu × [0,1]^D (Lip_f ve sup f için)"""
    G0 = initial_growth_bound(problem.K_radius, problem.growth_C, problem.T)
    lo = [0.0] + [-G0] * problem.n + [0.0] * problem.D
    hi = [problem.T] + [G0] * problem.n + [1.0] * problem.D
    return lo, hi


def _columns(handle, n: int):
    """(t, x, η) işleyicisini (P, 1+n+D) matris imzasına çevir"""
    return lambda X: np.asarray(handle(X[:, 0], X[:, 1:1 + n], X[:, 1 + n:]), dtype=np.float64)


def ensure_metadata(problem: VectorFieldProblem, config: Optional[Settings] = None) -> VectorFieldProblem:
    """Eksik Lipschitz/sup değerlerini örneklemeyle doldur ve tahmini olarak işaretle"""
    cfg = config or settings
    lip, sup = dict(problem.lip), dict(problem.sup)
    estimated = list(problem.estimated)
    G0 = initial_growth_bound(problem.K_radius, problem.growth_C, problem.T)
    u0 = problem.u0
    box_lo, box_hi = [-G0] * problem.n, [G0] * problem.n

    if "u0" not in lip:
        if u0.lipschitz is not None:
            lip["u0"] = u0.lipschitz
        else:
            lip["u0"] = estimate_lipschitz(u0.evaluator, box_lo, box_hi, cfg)
            estimated.append("lip_u0")
    if "u0" not in sup:
        if u0.sup_norm is not None:
            sup["u0"] = u0.sup_norm
        else:
            sup["u0"] = estimate_sup(u0.evaluator, box_lo, box_hi, cfg)
            estimated.append("sup_u0")

    lo, hi = source_domain(problem)
    for name, handle in (("f", problem.f), ("a", problem.a)):
        if handle is None:
            continue
        fn = _columns(handle, problem.n)
        if name not in lip:
            lip[name] = estimate_lipschitz(fn, lo, hi, cfg)
            estimated.append(f"lip_{name}")
        if name not in sup:
            sup[name] = estimate_sup(fn, lo, hi, cfg)
            estimated.append(f"sup_{name}")
        if f"max_{name}" not in sup:
            X = sample_box(lo, hi, cfg.lipschitz_samples, cfg.seed)
            values = fn(X)
            sup[f"max_{name}"] = cfg.safety_factor * max(float(np.max(values)), 0.0)
            sup[f"min_{name}"] = cfg.safety_factor * min(float(np.min(values)), 0.0)
            estimated.append(f"range_{name}")

    if estimated != list(problem.estimated) or lip != problem.lip or sup != problem.sup:
        logger.info(f"Problem metaverisi tamamlandı: lip={lip}, sup={sup}")
    return problem.model_copy(update={"lip": lip, "sup": sup, "estimated": sorted(set(estimated))})


def _scalar_handle(text: Optional[str], n: int, D: int):
    """Sabit veya (t, x, η) ifadesi"""
    symbols = make_symbols(n, D)
    fn = SymbolicFunction(parse_expression(text, symbols), symbols)
    return txeta_handle(fn), fn


def initial_from_config(cfg: ExperimentConfig, n: int, radius: float) -> InitialCondition:
    """U0 anahtarından başlangıç koşulu"""
    key = cfg.u0.strip()
    if key == "ramp":
        return ramp_initial(n)
    if key in ("piecewise", "piecewise_affine"):
        if not cfg.u0_kinks or not cfg.u0_values:
            raise ConfigError("piecewise u₀ için U0_KINKS ve U0_VALUES gerekli")
        return piecewise_initial(n, cfg.u0_kinks, cfg.u0_values)
    return smooth_initial(key, n, cfg.u0_smoothness or 3, radius, cfg.seed)


def problem_from_config(cfg: ExperimentConfig, config: Optional[Settings] = None) -> VectorFieldProblem:
    """Deney yapılandırmasından VectorFieldProblem"""
    run_cfg = config or settings
    n, D, T = cfg.n_space, cfg.n_params, cfg.horizon
    K_lo, K_hi = [cfg.k_lo] * n, [cfg.k_hi] * n

    if cfg.problem == "inline":
        if not cfg.field:
            raise ConfigError("PROBLEM=inline için FIELD gerekli")
        spec = inline_field([c for c in cfg.field.split(";") if c.strip()], n, D, T, K_lo, K_hi, cfg.seed)
    else:
        spec = builtin_field(cfg.problem, n, D, cfg.velocity)
    k = cfg.smoothness or spec.default_k

    radius = float(np.sqrt(n) * max(abs(cfg.k_lo), abs(cfg.k_hi)))
    G0 = initial_growth_bound(radius, spec.growth_C, T)
    u0 = initial_from_config(cfg, n, G0)
    estimated = ["growth_C", "ck_norms"] if spec.estimated else []

    f = f_fn = a = a_fn = None
    lip, sup = {}, {}
    if cfg.source is not None:
        f, f_fn = _scalar_handle(cfg.source, n, D)
    if cfg.damping is not None:
        a, a_fn = _scalar_handle(cfg.damping, n, D)
    for name, fn in (("f", f_fn), ("a", a_fn)):
        if fn is not None and fn.expr.is_number:
            value = float(fn.expr)
            lip[name], sup[name] = 0.0, abs(value)
            sup[f"max_{name}"], sup[f"min_{name}"] = max(value, 0.0), min(value, 0.0)

    problem = VectorFieldProblem(
        name=f"{spec.name}-{cfg.variant.value}", n=n, D=D, T=T, k=k, V=spec.V, div_V=spec.div_V,
        f=f, a=a, f_oracle=f_fn.derivative if f_fn else None, a_oracle=a_fn.derivative if a_fn else None,
        f_smoothness=k if f is not None else None, a_smoothness=k if a is not None else None,
        u0=u0, growth_C=spec.growth_C, ck_norms=spec.norms(G0, k), K_lo=K_lo, K_hi=K_hi,
        lip=lip, sup=sup, estimated=estimated,
    )
    return ensure_metadata(problem, run_cfg)
