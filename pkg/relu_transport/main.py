"""
relu-transport - CLI
build / eval / verify / sweep / props alt komutları
"""

from typing import List, Optional
import argparse
import logging
import os
import sys

import numpy as np
from dotenv import dotenv_values, load_dotenv
from pydantic import TypeAdapter

from .core.config import settings
from .core.errors import (
    BudgetExceededError, CapabilityError, CertificationError, ConfigError, InputShapeError,
    NetworkParseError, ReluTransportError,
)
from .models import ExperimentConfig, PropertyReport, Variant
from .services.characteristics import problem_from_config
from .services.estimates import sample_box
from .services.fields import smooth_target
from .services.harness import build_variant, run_settings, run_sweep, u0_radius
from .services.network import deserialize, serialize
from .services.property_suites import EXACT_SUITES, SUITES, run_suites
from .services.transport_builder import measure_against_reference
from .utils.helpers import csv_text, read_points, write_text

# Çevre değişkenlerini yükle
load_dotenv()

logger = logging.getLogger("relu_transport")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def load_experiment(path: str) -> ExperimentConfig:
    """dotenv biçimli anahtar=değer dosyasından deney yapılandırması"""
    if not os.path.isfile(path):
        raise ConfigError(f"Yapılandırma dosyası bulunamadı: {path}")
    return ExperimentConfig.from_mapping(dict(dotenv_values(path)))


def _epsilon(args, config: ExperimentConfig) -> float:
    return args.epsilon if args.epsilon is not None else config.epsilons[-1]


def cmd_build(args) -> int:
    """Tek ε için ağ ve sertifika üret"""
    config = load_experiment(args.config)
    cfg = run_settings(config)
    epsilon = _epsilon(args, config)
    build = build_variant(config, epsilon, cfg)
    write_text(args.out, serialize(build.network).decode("ascii"))
    certificate_path = args.certificate or os.path.splitext(args.out)[0] + ".certificate.json"
    write_text(certificate_path, build.certificate.model_dump_json(indent=2) + "\n")
    size = build.network.size()
    print(f"W={size.weights} L={size.layers} N={size.neurons} hata={build.measured:.6g} ε={epsilon:g}")
    return EXIT_OK if build.passed and build.measured <= epsilon else EXIT_FAILED


def cmd_eval(args) -> int:
    """Serileştirilmiş ağı nokta dosyasına uygula"""
    with open(args.network, "rb") as handle:
        net = deserialize(handle.read())
    try:
        X = read_points(args.points, net.input_dim)
    except ValueError as e:
        raise InputShapeError(str(e)) from e
    Y = net.realize(X)
    header = [f"x{i}" for i in range(net.input_dim)] + [f"y{j}" for j in range(net.output_dim)]
    text = csv_text(header, [list(map(float, x)) + list(map(float, y)) for x, y in zip(X, Y)])
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    """Kayıtlı ağın hatasını referans çözüme karşı ölç"""
    config = load_experiment(args.config)
    cfg = run_settings(config)
    epsilon = _epsilon(args, config)
    with open(args.network, "rb") as handle:
        net = deserialize(handle.read())

    if config.variant in (Variant.SMOOTH, Variant.U0):
        if config.variant == Variant.SMOOTH:
            target = smooth_target(config.target or "square", config.target_dim, k=config.smoothness,
                                   seed=config.seed)
            lo, hi, evaluator = target.lo, target.hi, target.evaluator
        else:
            problem = problem_from_config(config, cfg)
            radius = u0_radius(problem)
            lo, hi, evaluator = [-radius] * problem.n, [radius] * problem.n, problem.u0.evaluator
        X = sample_box(lo, hi, cfg.lattice_cap, cfg.seed)
        exact = np.asarray(evaluator(X), dtype=np.float64).reshape(-1)
        measured, points = float(np.max(np.abs(exact - net.realize(X, cfg)[:, 0]))), int(X.shape[0])
    else:
        problem = problem_from_config(config, cfg)
        measured, points = measure_against_reference(problem, config.variant, net, cfg)

    passed = measured <= epsilon
    print(f"hata={measured:.6g} ε={epsilon:g} noktalar={points} geçti={passed}")
    return EXIT_OK if passed else EXIT_FAILED


def cmd_sweep(args) -> int:
    """ε taraması, eğim ve kesin cebir takımları"""
    config = load_experiment(args.config)
    if args.output_dir:
        config = config.model_copy(update={"output_dir": args.output_dir})
    result = run_sweep(config)
    for row in result.rows:
        print(f"ε={row.epsilon:g} W={row.weights} L={row.layers} hata={row.measured_sup_error:.4g} "
              f"geçti={row.passed}")
    for row in result.direct:
        print(f"[doğrudan] ε={row.epsilon:g} d/s={row.predicted_rate:g} W={row.weights} uygun={row.feasible}")
    if result.fit is not None:
        print(f"eğim={result.fit.slope:.4f} ham={result.fit.raw_slope:.4f} artık={result.fit.residual_rms:.3g}")

    reports = run_suites(EXACT_SUITES, seed=config.seed)
    for report in reports:
        for check in report.checks:
            if not check.passed:
                print(f"[{report.suite}] FAIL {check.name} {check.detail}")
    suites_passed = all(report.passed for report in reports)
    print(f"takımlar={','.join(EXACT_SUITES)} geçti={suites_passed}")
    write_text(os.path.join(result.run_dir, "properties.json"),
               TypeAdapter(List[PropertyReport]).dump_json(reports, indent=2).decode("utf-8") + "\n")
    print(f"dizin={result.run_dir}")
    return EXIT_OK if result.passed and suites_passed else EXIT_FAILED


def cmd_props(args) -> int:
    """Özellik takımları"""
    reports = run_suites(args.suite, seed=args.seed)
    for report in reports:
        for check in report.checks:
            status = "OK" if check.passed else "FAIL"
            print(f"[{report.suite}] {status} {check.name} {check.detail}")
    return EXIT_OK if all(report.passed for report in reports) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=settings.app_name,
                                     description="Taşıma denklemleri için sertifikalı ReLU ağları")
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.version}")
    parser.add_argument("--log-level", default=None, help="Günlük seviyesi (varsayılan: ayarlardan)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="Ağ ve sertifika üret")
    p.add_argument("--config", required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--out", required=True, help="Serileştirilmiş ağ yolu")
    p.add_argument("--certificate", default=None)
    p.set_defaults(handler=cmd_build)

    p = sub.add_parser("eval", help="Ağı nokta dosyasına uygula")
    p.add_argument("--network", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("verify", help="Hata sertifikası")
    p.add_argument("--config", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("sweep", help="ε taraması")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("props", help="Özellik takımları")
    p.add_argument("--suite", action="append", choices=sorted(SUITES), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_props)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=(args.log_level or settings.log_level).upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except (ConfigError, CapabilityError, NetworkParseError, InputShapeError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except (CertificationError, BudgetExceededError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILED
    except OSError as e:
        logger.error(f"Dosya hatası: {e}")
        return EXIT_USAGE
    except ReluTransportError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
