"""
relu-transport - Harness
ε taraması: kurulum, ölçüm, ölçekleme eğimi ve rapor dosyaları
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple, Union
import logging
import math
import os
import time

import numpy as np
from pydantic import BaseModel

from ..core.config import settings, Settings
from ..core.errors import BudgetExceededError, CertificationError, ConfigError
from ..models.certificate_models import ApproxCertificate, BuildCertificate
from ..models.experiment_models import DirectBaseline, ExperimentConfig, ExperimentResult, ScalingFit, SweepRow
from ..models.problem_models import InitialKind, SmoothTarget, Variant, VectorFieldProblem
from ..utils.helpers import allocate_run_dir, csv_text, generate_hash, gnuplot_text, write_text
from .characteristics import FlowMap, flow_domain, problem_from_config, reference_solution
from .estimates import estimate_lipschitz, estimate_sup, initial_growth_bound, sample_box
from .fields import smooth_target
from .network import Network
from .smooth_approx import approx_smooth
from .transport_builder import BUILDERS, u0_target

logger = logging.getLogger(__name__)

SWEEP_HEADER = [
    "config_hash", "epsilon", "measured_sup_error", "weights", "layers", "neurons", "passed",
    "certificate_digest",
]
TIMING_HEADER = ["epsilon", "build_ms", "eval_ms"]
DIRECT_HEADER = ["epsilon", "dim", "smoothness", "predicted_rate", "feasible", "weights", "measured_sup_error"]
EVAL_POINTS = 4096
MIN_FIT_POINTS = 4


class _Build(BaseModel):
    """Tek ε kurulumunun çıktısı"""
    network: Network
    certificate: Union[ApproxCertificate, BuildCertificate]
    measured: float
    passed: bool
    lo: List[float]
    hi: List[float]

    class Config:
        arbitrary_types_allowed = True


def run_settings(config: ExperimentConfig, base: Optional[Settings] = None) -> Settings:
    """Deney anahtarlarını çalışma ayarlarına uygula"""
    cfg = base or settings
    update = {"seed": config.seed, "bound_source": config.bound_source}
    for key in ("lattice_t", "lattice_x", "lattice_eta"):
        value = getattr(config, key)
        if value is not None:
            update[key] = value
    return cfg.model_copy(update=update)


def fit_scaling(result: Union[ExperimentResult, Iterable[Tuple[float, int]]]) -> ScalingFit:
    """log(W/(ln(1/ε)+1)) ~ log(1/ε) en küçük kareler eğimi; ham eğim de raporlanır"""
    if isinstance(result, ExperimentResult):
        points = [(row.epsilon, row.weights) for row in result.rows]
    else:
        points = [(float(eps), int(w)) for eps, w in result]
    if len(points) < MIN_FIT_POINTS:
        raise ConfigError(f"Eğim için en az {MIN_FIT_POINTS} nokta gerekli, {len(points)} var")

    eps = np.array([p[0] for p in points], dtype=np.float64)
    weights = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(eps <= 0.0) or np.any(eps >= 1.0):
        raise ConfigError("Eğim için ε ∈ (0,1) olmalı")
    x = np.log(1.0 / eps)
    if np.ptp(x) <= 0.0:
        raise ConfigError("Dejenere tarama: tüm ε değerleri aynı")
    if np.any(weights <= 0):
        logger.warning("Boş ağ içeren satırlar W = 1 olarak alındı")
        weights = np.maximum(weights, 1.0)

    y = np.log(weights / (x + 1.0))
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(residual ** 2)))
    spread = float(np.sqrt(np.mean((y - y.mean()) ** 2)))
    raw_slope = float(np.polyfit(x, np.log(weights), 1)[0])
    fit = ScalingFit(slope=float(slope), intercept=float(intercept), residual_rms=rms,
                     relative_residual=rms / spread if spread > 0 else 0.0, raw_slope=raw_slope,
                     points=len(points))
    logger.info(f"Ölçekleme eğimi: {fit.slope:.3f} (ham {fit.raw_slope:.3f}), artık {fit.residual_rms:.3g}")
    return fit


def u0_radius(problem: VectorFieldProblem) -> float:
    return initial_growth_bound(problem.K_radius, problem.growth_C, problem.T)


def solution_smoothness(problem: VectorFieldProblem) -> int:
    """u'nun düzgünlüğü s: kırılmalı u₀ için 1, düzgün u₀ için min(s₀, k)"""
    u0 = problem.u0
    s = u0.smoothness if u0.kind == InitialKind.SMOOTH and u0.smoothness else 1
    return max(1, min(s, problem.k))


def solution_target(problem: VectorFieldProblem, variant: Variant, cfg: Settings,
                    flow_map: Optional[FlowMap] = None) -> SmoothTarget:
    """u'yu [0,T] × K × [0,1]^D üzerinde d = 1+n+D boyutlu düzgün hedef olarak sar"""
    fm = flow_map or FlowMap(problem, cfg)
    n = problem.n
    lo, hi = flow_domain(problem)

    def evaluate(Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        return reference_solution(problem, variant, Z[:, 0], Z[:, 1:1 + n], Z[:, 1 + n:], fm)

    bound = max(estimate_sup(evaluate, lo, hi, cfg), estimate_lipschitz(evaluate, lo, hi, cfg), 1e-12)
    return SmoothTarget(name=f"direct-{Variant(variant).value}", dim=problem.d, lo=lo, hi=hi, evaluator=evaluate,
                        k=solution_smoothness(problem), norm_bound=bound, noise_level=cfg.ode_atol)


def direct_baseline(target: SmoothTarget, epsilon: float, cfg: Settings) -> DirectBaseline:
    """Karşılaştırma: u'ya doğrudan düzgün yaklaşım, beklenen oran ε^{−d/s}"""
    rate = target.dim / target.k
    try:
        net, certificate = approx_smooth(target, epsilon, cfg)
    except (BudgetExceededError, CertificationError) as e:
        logger.warning(f"Doğrudan yaklaşım ε={epsilon} için uygulanamaz: {e}")
        return DirectBaseline(epsilon=epsilon, dim=target.dim, smoothness=target.k, predicted_rate=rate,
                              feasible=False, detail=str(e))
    return DirectBaseline(epsilon=epsilon, dim=target.dim, smoothness=target.k, predicted_rate=rate,
                          feasible=True, weights=net.weights, measured_sup_error=certificate.measured_error)


def build_variant(config: ExperimentConfig, epsilon: float, cfg: Settings,
                  problem: Optional[VectorFieldProblem] = None) -> _Build:
    """Tek ε için yapılandırmanın istediği ağı kur ve sertifikala"""
    variant = config.variant
    if variant == Variant.SMOOTH:
        target = smooth_target(config.target or "square", config.target_dim, k=config.smoothness, seed=config.seed)
        net, certificate = approx_smooth(target, epsilon, cfg)
        return _Build(network=net, certificate=certificate, measured=certificate.measured_error, passed=True,
                      lo=target.lo, hi=target.hi)

    problem = problem or problem_from_config(config, cfg)
    if variant == Variant.U0:
        return _build_u0(problem, epsilon, cfg)

    net, certificate = BUILDERS[variant](problem, epsilon, cfg)
    lo, hi = flow_domain(problem)
    return _Build(network=net, certificate=certificate, measured=certificate.measured_sup_error,
                  passed=bool(certificate.passed), lo=lo, hi=hi)


def _build_u0(problem: VectorFieldProblem, epsilon: float, cfg: Settings) -> _Build:
    """u₀ ağı tek başına; kesin ağlarda ölçüm Sobol noktalarında"""
    u0 = problem.u0
    radius = u0_radius(problem)
    lo, hi = [-radius] * u0.n, [radius] * u0.n
    if u0.exact_net is None:
        net, certificate = approx_smooth(u0_target(u0, radius), epsilon, cfg)
        return _Build(network=net, certificate=certificate, measured=certificate.measured_error, passed=True,
                      lo=lo, hi=hi)

    net = u0.exact_net
    X = sample_box(lo, hi, cfg.lattice_cap, cfg.seed)
    measured = float(np.max(np.abs(np.asarray(u0.evaluator(X)).reshape(-1) - net.realize(X, cfg)[:, 0])))
    certificate = ApproxCertificate(
        name=u0.name, epsilon=epsilon, grid_n=1, taylor_order=0, requested_order=0, mul_budget=0.0,
        size=net.size(), measured_error=measured, validation_points=int(X.shape[0]),
        active_axes=list(range(u0.n)), estimated=False, warnings=["Kesin ağ: boyut ε'dan bağımsız"],
    )
    return _Build(network=net, certificate=certificate, measured=measured, passed=measured <= epsilon,
                  lo=lo, hi=hi)


def _certificate_json(certificate: BaseModel) -> str:
    return certificate.model_dump_json(indent=2)


def _sweep_one(config: ExperimentConfig, epsilon: float, cfg: Settings,
               problem: Optional[VectorFieldProblem]) -> Tuple[SweepRow, Optional[str]]:
    """Tek satır; sertifika hatası başarısız satır olur"""
    started = time.perf_counter()
    try:
        build = build_variant(config, epsilon, cfg, problem)
    except CertificationError as e:
        logger.error(f"ε={epsilon}: sertifika başarısız: {e}")
        text = f"certification-failed {epsilon!r} {e.measured!r}"
        row = SweepRow(epsilon=epsilon, measured_sup_error=e.measured, weights=0, layers=0, neurons=0,
                       passed=False, certificate_digest=generate_hash(text)[:16],
                       build_ms=(time.perf_counter() - started) * 1e3)
        return row, None
    build_ms = (time.perf_counter() - started) * 1e3

    X = sample_box(build.lo, build.hi, EVAL_POINTS, cfg.seed)
    started = time.perf_counter()
    build.network.realize(X, cfg)
    eval_ms = (time.perf_counter() - started) * 1e3

    document = _certificate_json(build.certificate)
    size = build.network.size()
    row = SweepRow(epsilon=epsilon, measured_sup_error=build.measured, weights=size.weights, layers=size.layers,
                   neurons=size.neurons, passed=build.passed and build.measured <= epsilon,
                   certificate_digest=generate_hash(document)[:16], build_ms=build_ms, eval_ms=eval_ms)
    logger.info(f"ε={epsilon}: W={size.weights}, L={size.layers}, hata={build.measured:.3g}, geçti={row.passed}")
    return row, document


def run_sweep(config: ExperimentConfig, base: Optional[Settings] = None) -> ExperimentResult:
    """ε listesi boyunca kur, ölç ve <output_dir>/<hash12>/run-NNN altına yaz"""
    cfg = run_settings(config, base)
    digest = config.config_hash()
    try:
        run_dir = allocate_run_dir(os.path.join(config.output_dir, digest[:12]))
    except OSError as e:
        logger.error(f"Çıktı dizini oluşturulamadı: {e}")
        raise ConfigError(f"Çıktı dizini yazılamaz: {config.output_dir}") from e

    problem = None
    if config.variant != Variant.SMOOTH:
        problem = problem_from_config(config, cfg)
    logger.info(f"Tarama başlıyor: {config.variant.value}, ε={config.epsilons}, dizin={run_dir}")

    if config.parallel_builds and len(config.epsilons) > 1:
        with ThreadPoolExecutor(max_workers=max(1, cfg.threads)) as pool:
            outcomes = list(pool.map(lambda eps: _sweep_one(config, eps, cfg, problem), config.epsilons))
    else:
        outcomes = [_sweep_one(config, eps, cfg, problem) for eps in config.epsilons]

    rows = [row for row, _ in outcomes]
    fit = None
    usable = [row for row in rows if row.weights > 0]
    if len(usable) >= MIN_FIT_POINTS:
        try:
            fit = fit_scaling([(row.epsilon, row.weights) for row in usable])
        except ConfigError as e:
            logger.warning(f"Eğim hesaplanamadı: {e}")

    direct = []
    if config.direct_baseline:
        if problem is None or config.variant == Variant.U0:
            logger.warning(f"Doğrudan karşılaştırma {config.variant.value} varyantı için atlandı")
        else:
            target = solution_target(problem, config.variant, cfg)
            direct = [direct_baseline(target, eps, cfg) for eps in config.epsilons]

    result = ExperimentResult(config_hash=digest, variant=config.variant, problem=config.problem, rows=rows,
                              fit=fit, direct=direct, passed=all(row.passed for row in rows), run_dir=run_dir)
    _write_reports(result, [document for _, document in outcomes], run_dir)
    if not result.passed:
        logger.warning(f"Taramada başarısız satır var: {run_dir}")
    return result


def _write_reports(result: ExperimentResult, documents: Sequence[Optional[str]], run_dir: str) -> None:
    """sweep.csv, timings.csv, result.json, certificate-<i>.json, sweep.dat"""
    digest = result.config_hash
    write_text(os.path.join(run_dir, "sweep.csv"), csv_text(SWEEP_HEADER, [
        [digest, row.epsilon, row.measured_sup_error, row.weights, row.layers, row.neurons, row.passed,
         row.certificate_digest]
        for row in result.rows
    ]))
    write_text(os.path.join(run_dir, "timings.csv"), csv_text(TIMING_HEADER, [
        [row.epsilon, round(row.build_ms, 3), round(row.eval_ms, 3)] for row in result.rows
    ]))
    payload = result.model_dump_json(indent=2, exclude={"run_dir": True,
                                                        "rows": {"__all__": {"build_ms", "eval_ms"}}})
    write_text(os.path.join(run_dir, "result.json"), payload + "\n")
    if result.direct:
        write_text(os.path.join(run_dir, "direct.csv"), csv_text(DIRECT_HEADER, [
            [row.epsilon, row.dim, row.smoothness, row.predicted_rate, row.feasible, row.weights,
             "" if row.measured_sup_error is None else row.measured_sup_error]
            for row in result.direct
        ]))
    for index, document in enumerate(documents, start=1):
        if document is not None:
            write_text(os.path.join(run_dir, f"certificate-{index}.json"), document + "\n")

    comments = [f"config_hash {digest}", f"variant {result.variant.value}", f"problem {result.problem}"]
    if result.fit is not None:
        comments.append(f"slope {result.fit.slope!r} intercept {result.fit.intercept!r} "
                        f"residual_rms {result.fit.residual_rms!r} raw_slope {result.fit.raw_slope!r}")
    columns = ["epsilon", "inv_eps_log", "weights", "layers", "neurons", "measured_sup_error"]
    write_text(os.path.join(run_dir, "sweep.dat"), gnuplot_text(comments, columns, [
        [row.epsilon, math.log(1.0 / row.epsilon), row.weights, row.layers, row.neurons, row.measured_sup_error]
        for row in result.rows
    ]))
