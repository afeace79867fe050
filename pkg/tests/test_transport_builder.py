import math

import numpy as np
import pytest

from relu_transport.core import BudgetExceededError, CapabilityError, ConfigError
from relu_transport.core.config import Settings
from relu_transport.models import ConstructionId, ExperimentConfig, InitialCondition, InitialKind, Variant
from relu_transport.services.calculus import selector_net, sparse_concat
from relu_transport.services.characteristics import problem_from_config, reference_solution
from relu_transport.services.fields import ramp_initial, smooth_initial, smooth_target, zero_initial
from relu_transport.services.harness import direct_baseline, fit_scaling, solution_smoothness, solution_target
from relu_transport.services.smooth_approx import approx_smooth
from relu_transport.services.transport_builder import (
    build_u0_net, build_homogeneous, build_weak, build_source, build_conservative, build_damped,
    validation_lattice, measure_against_reference,
)


@pytest.fixture
def cfg():
    return Settings(lipschitz_samples=1024)


@pytest.fixture
def rng():
    return np.random.default_rng(8)


def make_problem(cfg, **values):
    """Yapılandırma anahtarlarından problem"""
    values.setdefault("epsilons", [0.1])
    return problem_from_config(ExperimentConfig(**values), cfg)


def ramp(z):
    return np.maximum(0.0, 1.0 - np.abs(z))


def box_points(rng, count, n_params=0, lo=-2.0, hi=2.0):
    """(t, x, η) örnekleri"""
    cols = [rng.uniform(0.0, 1.0, count), rng.uniform(lo, hi, count)]
    cols += [rng.uniform(0.0, 1.0, count) for _ in range(n_params)]
    return np.column_stack(cols)


def test_u0_ramp_is_exact():
    """Rampa u₀: kesin ağ, W = 6, hata 0"""
    net = build_u0_net(ramp_initial(1), 1e-3)
    assert net.weights == 6
    x = np.linspace(-3.0, 3.0, 601)
    assert np.max(np.abs(net.realize(x[:, None])[:, 0] - ramp(x))) <= 1e-15


def test_u0_zero_is_empty():
    assert build_u0_net(zero_initial(2), 0.1).weights == 0


def test_u0_smooth_within_delta(cfg):
    """Düzgün u₀ = sin, s = 3: [−R, R] üzerinde hata ≤ δ"""
    u0 = smooth_initial("sin(x0)", 1, 3, radius=2.0)
    net = build_u0_net(u0, 1e-2, cfg, radius=2.0)
    x = np.linspace(-2.0, 2.0, 4001)
    assert np.max(np.abs(net.realize(x[:, None])[:, 0] - np.sin(x))) <= 1e-2


def test_u0_smooth_without_metadata():
    u0 = InitialCondition(name="bare", kind=InitialKind.SMOOTH, n=1, evaluator=lambda x: np.sin(x[:, 0]))
    with pytest.raises(CapabilityError):
        build_u0_net(u0, 0.1)


@pytest.mark.parametrize("delta", [0.0, 1.0])
def test_u0_delta_range(delta):
    with pytest.raises(ConfigError):
        build_u0_net(ramp_initial(1), delta)


def test_validation_lattice_switches_to_sobol(cfg):
    problem = make_problem(cfg, problem="param-shear", n_params=1)
    assert validation_lattice(problem, cfg).shape == (41 * 41 * 9, 3)
    small = Settings(lattice_cap=1000)
    assert validation_lattice(problem, small).shape == (1024, 3)
    wide = make_problem(cfg, problem="param-shear", n_params=3)
    assert validation_lattice(wide, cfg).shape[0] == 2 ** 17


def test_homogeneous_parametric_shear(cfg, rng):
    """V = η, rampa u₀, ε = 1e-2: 41×81×21 kafeste hata ≤ ε"""
    problem = make_problem(cfg, problem="param-shear", n_params=1)
    settings = Settings(lipschitz_samples=1024, lattice_x=81, lattice_eta=21)
    net, cert = build_homogeneous(problem, 1e-2, settings)
    assert cert.construction_id == ConstructionId.STRONG
    assert cert.validation_points == 41 * 81 * 21
    assert cert.passed and cert.measured_sup_error <= 1e-2
    assert cert.deltas == pytest.approx({"delta1": 5e-3, "delta2": 5e-3})
    assert cert.ledger["u0"] + cert.ledger["flow"] <= 1e-2 * (1 + 1e-12)
    assert cert.ledger_within_budget()
    assert "flow_derivatives" in cert.estimated
    Z = box_points(rng, 2000, 1)
    exact = ramp(Z[:, 1] - Z[:, 2] * Z[:, 0])
    assert np.max(np.abs(net.realize(Z)[:, 0] - exact)) <= 1e-2


def test_weak_label_and_piecewise_initial(cfg, rng):
    """Üç kırılmalı parçalı afin u₀, V = 0.5"""
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0, u0="piecewise",
                           u0_kinks=[-1.0, 0.0, 1.0], u0_values=[0.0, 1.0, 0.5])
    net, cert = build_weak(problem, 2e-2, cfg)
    assert cert.construction_id == ConstructionId.WEAK
    assert cert.passed
    Z = box_points(rng, 2000)
    exact = np.interp(Z[:, 1] - 0.5 * Z[:, 0], [-1.0, 0.0, 1.0], [0.0, 1.0, 0.5])
    assert np.max(np.abs(net.realize(Z)[:, 0] - exact)) <= 2e-2


def test_frozen_flow_matches_u0(cfg, rng):
    """V ≡ 0: u(t, x) = u₀(x)"""
    problem = make_problem(cfg, problem="const", velocity="0", n_params=0)
    net, cert = build_homogeneous(problem, 1e-2, cfg)
    Z = box_points(rng, 1000)
    assert np.max(np.abs(net.realize(Z)[:, 0] - ramp(Z[:, 1]))) <= 1e-2
    assert cert.passed


def test_source_constant(cfg, rng):
    """V = 0.5, f ≡ 1, ε = 2e-2: N = 1500 ve u₀(x − 0.5t) + t"""
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0, source="1", variant="source")
    eps = 2e-2
    net, cert = build_source(problem, eps, cfg)
    assert cert.construction_id == ConstructionId.SOURCE
    assert cert.N == 1500
    assert cert.deltas["delta1"] == pytest.approx(eps / 6)
    assert cert.deltas["delta2"] == pytest.approx(eps / 12)
    assert cert.deltas["delta3"] == pytest.approx(eps / 12)
    assert set(cert.ledger) == {"u0", "flow_u0", "flow_source", "source", "quadrature"}
    assert cert.ledger_sum < eps
    assert cert.passed and cert.measured_sup_error <= eps
    Z = box_points(rng, 2000)
    exact = ramp(Z[:, 1] - 0.5 * Z[:, 0]) + Z[:, 0]
    assert np.max(np.abs(net.realize(Z)[:, 0] - exact)) <= eps


def test_zero_source_matches_homogeneous(cfg, rng):
    eps = 2e-2
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0, source="0", variant="source")
    source_net, cert = build_source(problem, eps, cfg)
    homogeneous_net, _ = build_homogeneous(problem, eps, cfg)
    Z = box_points(rng, 1000)
    assert cert.passed
    assert np.max(np.abs(source_net.realize(Z) - homogeneous_net.realize(Z))) <= 2 * eps


def test_source_requires_f(cfg):
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0)
    with pytest.raises(CapabilityError):
        build_source(problem, 1e-2, cfg)


def test_conservative_linear_field(cfg, rng):
    """V = x, ε = 2e-2: u₀(x e^{−t}) e^{−t}; dört çeyrek defter"""
    problem = make_problem(cfg, problem="linear", n_params=0, variant="conservative")
    eps = 2e-2
    net, cert = build_conservative(problem, eps, cfg)
    G_J = cert.constants_used["G_J"]
    assert cert.construction_id == ConstructionId.CONSERVATIVE
    assert cert.deltas["delta1"] == pytest.approx(eps / (8 * G_J))
    assert cert.deltas["delta2"] == pytest.approx(eps / (8 * G_J))
    assert cert.deltas["delta3"] == pytest.approx(eps / 4)
    assert set(cert.ledger) == {"u0", "flow", "jacobian", "gadget", "cross"}
    assert cert.ledger_sum == pytest.approx(eps)
    assert cert.ledger_within_budget()
    assert cert.mul_c2 is not None
    assert "G_J" in cert.estimated
    assert cert.passed and cert.measured_sup_error <= eps
    Z = box_points(rng, 2000)
    exact = ramp(Z[:, 1] * np.exp(-Z[:, 0])) * np.exp(-Z[:, 0])
    assert np.max(np.abs(net.realize(Z)[:, 0] - exact)) <= eps


def test_conservative_requires_smoothness(cfg):
    problem = make_problem(cfg, problem="linear", n_params=0, smoothness=1)
    with pytest.raises(CapabilityError):
        build_conservative(problem, 1e-2, cfg)


def test_damped_constant_rate(cfg, rng):
    """a ≡ 1, V = 0.5, ε = 2e-2: u₀(x − 0.5t) e^{−t}"""
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0, damping="1", variant="damped")
    eps = 2e-2
    net, cert = build_damped(problem, eps, cfg)
    assert cert.construction_id == ConstructionId.DAMPED
    assert cert.N is not None and cert.N > 0
    assert cert.ledger_within_budget()
    assert cert.passed and cert.measured_sup_error <= eps
    Z = box_points(rng, 2000)
    exact = ramp(Z[:, 1] - 0.5 * Z[:, 0]) * np.exp(-Z[:, 0])
    assert np.max(np.abs(net.realize(Z)[:, 0] - exact)) <= eps


def test_damped_requires_a(cfg):
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0)
    with pytest.raises(CapabilityError):
        build_damped(problem, 1e-2, cfg)


def test_builder_rejects_epsilon(cfg):
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0)
    with pytest.raises(ConfigError):
        build_homogeneous(problem, 1.5, cfg)


def test_proof_bounds_exceed_budget():
    """Kanıt sabitleri V = x için uygulanamaz ızgara verir"""
    cfg = Settings(lipschitz_samples=1024, bound_source="proof")
    problem = make_problem(cfg, problem="linear", n_params=0)
    with pytest.raises(BudgetExceededError):
        build_homogeneous(problem, 1e-2, cfg)


def test_measure_against_reference_exact_network(cfg):
    """V ≡ 0 için u₀ kesin ağı referansla birebir"""
    problem = make_problem(cfg, problem="const", velocity="0", n_params=0)
    builder_net = build_u0_net(problem.u0, 0.1)
    net = sparse_concat(builder_net, selector_net(2, [1]))
    error, points = measure_against_reference(problem, Variant.HOMOGENEOUS, net, cfg)
    assert error <= 1e-12
    assert points == 41 * 41


def test_dimension_independence(cfg):
    """V = ortalama(η), rampa u₀, ε = 1e-2: taşıma ağı d içinde polinom büyür, doğrudan yaklaşım uygulanamaz"""
    eps = 1e-2
    # ölçülen ε-eğimi / (d/s): birim d/s başına gerçek üs
    smooth = smooth_target("square")
    fit = fit_scaling([(e, approx_smooth(smooth, e, cfg)[0].weights) for e in (2.0 ** -j for j in range(3, 10))])
    per_rate = fit.slope / (smooth.dim / smooth.k)
    assert per_rate > 0.1

    weights, problems = {}, {}
    for D in (1, 4, 8):
        problem = make_problem(cfg, problem="param-shear", n_params=D, smoothness=2 + D)
        net, cert = build_homogeneous(problem, eps, cfg)
        assert cert.passed, f"D={D}: {cert.measured_sup_error}"
        weights[D], problems[D] = net.weights, problem

    d1, d8 = problems[1].d, problems[8].d
    assert (d1, d8) == (3, 10)
    growth = math.log(weights[8] / weights[1])
    assert growth / math.log(d8 / d1) < 3.5
    # doğrudan yaklaşımın log W artışı: per_rate · (d₈ − d₁)/s · ln(1/ε)
    direct_growth = per_rate * (d8 - d1) / solution_smoothness(problems[8]) * math.log(1 / eps)
    assert growth < direct_growth / 2

    baseline = direct_baseline(solution_target(problems[8], Variant.HOMOGENEOUS, cfg), eps, cfg)
    assert baseline.predicted_rate == 10.0
    assert not baseline.feasible and "max_grid_nodes" in baseline.detail


def test_rotation_conservative_matches_homogeneous(rng):
    """Dönme alanı (div V = 0, n = 2): korunumlu ve homojen çözüm aynı"""
    cfg = Settings(lipschitz_samples=1024, lattice_t=11, lattice_x=21)
    problem = make_problem(cfg, problem="rotation", n_space=2, n_params=0, k_lo=-1.0, k_hi=1.0,
                           variant="conservative")
    eps = 0.1
    conservative_net, conservative = build_conservative(problem, eps, cfg)
    homogeneous_net, homogeneous = build_homogeneous(problem, eps, cfg)
    assert conservative.passed and conservative.measured_sup_error <= eps
    assert homogeneous.passed and homogeneous.measured_sup_error <= eps
    assert conservative.construction_id == ConstructionId.CONSERVATIVE

    Z = np.column_stack([rng.uniform(0.0, 1.0, 1000), rng.uniform(-1.0, 1.0, (1000, 2))])
    gap = np.max(np.abs(conservative_net.realize(Z)[:, 0] - homogeneous_net.realize(Z)[:, 0]))
    assert gap <= 2 * eps
    # u(t, x) = u₀(cos t·x₁ + sin t·x₂)
    exact = ramp(np.cos(Z[:, 0]) * Z[:, 1] + np.sin(Z[:, 0]) * Z[:, 2])
    reference = reference_solution(problem, Variant.HOMOGENEOUS, Z[:, 0], Z[:, 1:3])
    assert np.max(np.abs(reference - exact)) <= 1e-6


def test_zero_damping_matches_homogeneous(cfg, rng):
    """a ≡ 0: sönümlü ağ homojen ağla aynı çözümü verir"""
    eps = 2e-2
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0, damping="0", variant="damped")
    damped_net, cert = build_damped(problem, eps, cfg)
    homogeneous_net, _ = build_homogeneous(problem, eps, cfg)
    assert cert.construction_id == ConstructionId.DAMPED
    assert cert.passed and cert.measured_sup_error <= eps
    Z = box_points(rng, 1000)
    assert np.max(np.abs(damped_net.realize(Z) - homogeneous_net.realize(Z))) <= 2 * eps
    assert np.max(np.abs(damped_net.realize(Z)[:, 0] - ramp(Z[:, 1] - 0.5 * Z[:, 0]))) <= eps


def test_source_longer_horizon(cfg, rng):
    """T = 2, V = 0.5, f ≡ 1, ε = 0.05: N = ⌈15·2/0.05·2⌉ = 1200, t ∈ [0, 2] boyunca u₀(x − 0.5t) + t"""
    eps = 0.05
    problem = make_problem(cfg, problem="const", velocity="0.5", n_params=0, source="1", variant="source",
                           horizon=2.0)
    net, cert = build_source(problem, eps, cfg)
    assert cert.N == 1200
    assert cert.passed and cert.measured_sup_error <= eps
    Z = box_points(rng, 2000)
    Z[:, 0] *= 2.0
    exact = ramp(Z[:, 1] - 0.5 * Z[:, 0]) + Z[:, 0]
    assert np.max(np.abs(net.realize(Z)[:, 0] - exact)) <= eps
