import math

import numpy as np
import pytest

from relu_transport.core import Settings, CapabilityError, ConfigError, StiffnessError
from relu_transport.models import ExperimentConfig, Variant, VectorFieldProblem
from relu_transport.services.characteristics import FlowMap, reference_solution, problem_from_config
from relu_transport.services.estimates import ck_bound, hadamard_bound, hadamard_J_bound, initial_growth_bound
from relu_transport.services.fields import (
    const_field, linear_field, rotation_field, param_shear_field, inline_field, ramp_initial,
)


@pytest.fixture
def tight():
    """Sıkı toleranslı ayarlar"""
    return Settings(ode_atol=1e-12, ode_rtol=1e-10)


@pytest.fixture
def rng():
    return np.random.default_rng(5)


def make_problem(spec, T=1.0, K=2.0, **extra):
    """FieldSpec -> VectorFieldProblem"""
    n = spec.n
    G0 = initial_growth_bound(K * math.sqrt(n), spec.growth_C, T)
    return VectorFieldProblem(
        name=spec.name, n=n, D=spec.D, T=T, V=spec.V, div_V=spec.div_V, u0=ramp_initial(n),
        growth_C=spec.growth_C, ck_norms=spec.norms(G0, 3), K_lo=[-K] * n, K_hi=[K] * n, **extra,
    )


def shipped_fields():
    return [const_field(1, 1, [0.5]), linear_field(1, 1), rotation_field(2, 1), param_shear_field(1, 2)]


def random_tuples(rng, problem, count):
    s = rng.uniform(0.0, problem.T, count)
    t = rng.uniform(0.0, problem.T, count)
    x = rng.uniform(problem.K_lo, problem.K_hi, size=(count, problem.n))
    eta = rng.uniform(0.0, 1.0, size=(count, problem.D))
    return s, t, x, eta


def test_const_flow_closed_form(tight, rng):
    """V ≡ v: X(0,t,x) = x − t·v"""
    fm = FlowMap(make_problem(const_field(1, 0, [0.5])), tight)
    t = rng.uniform(0.0, 1.0, 200)
    x = rng.uniform(-2.0, 2.0, (200, 1))
    X = fm.flow(np.zeros(200), t, x)
    assert np.max(np.abs(X[:, 0] - (x[:, 0] - 0.5 * t))) <= 1e-8


def test_linear_flow_and_jacobian(tight, rng):
    """V(x) = x: X(s,t,x) = x e^{s−t}, J(0,t,x) = e^{−t}"""
    fm = FlowMap(make_problem(linear_field(1, 0)), tight)
    s = rng.uniform(0.0, 1.0, 200)
    t = rng.uniform(0.0, 1.0, 200)
    x = rng.uniform(-2.0, 2.0, (200, 1))
    X = fm.flow(s, t, x)
    assert np.max(np.abs(X[:, 0] - x[:, 0] * np.exp(s - t))) <= 1e-8
    J = fm.jacobian_factor(np.zeros(200), t, x)
    assert np.max(np.abs(J - np.exp(-t))) <= 1e-8


def test_zero_length_integration_is_exact():
    """X(t,t,x,η) = x"""
    fm = FlowMap(make_problem(rotation_field(2, 1)))
    x = np.array([[0.3, -1.7], [1.1, 0.25]])
    t = np.array([0.4, 0.9])
    X = fm.flow(t, t, x, np.array([[0.2], [0.8]]))
    assert np.array_equal(X, x)


def test_single_point_returns_vector():
    """Tek nokta girişi (n,) çıkışı verir"""
    fm = FlowMap(make_problem(rotation_field(2, 1)))
    X = fm.flow(0.0, 0.5, [1.0, 0.0], [0.0])
    assert X.shape == (2,)
    assert np.allclose(X, [math.cos(0.5), -math.sin(0.5)], atol=1e-7)


def test_semigroup_and_inverse(tight, rng):
    """Yarıgrup ve ters tutarlılık, dört hazır alan"""
    for spec in shipped_fields():
        problem = make_problem(spec)
        fm = FlowMap(problem, tight)
        s1, t, x, eta = random_tuples(rng, problem, 1000)
        s2 = rng.uniform(0.0, problem.T, 1000)
        direct = fm.flow(s2, t, x, eta)
        chained = fm.flow(s2, s1, fm.flow(s1, t, x, eta), eta)
        assert np.max(np.abs(direct - chained)) <= 1e-7, spec.name
        back = fm.flow(t, np.zeros(1000), fm.flow(np.zeros(1000), t, x, eta), eta)
        assert np.max(np.abs(back - x)) <= 1e-7, spec.name


def test_growth_bound_holds(rng):
    """Örneklenen |X| ≤ G0"""
    for spec in shipped_fields():
        problem = make_problem(spec)
        G0 = ck_bound(problem, 1)["G0"]
        s, t, x, eta = random_tuples(rng, problem, 500)
        X = FlowMap(problem).flow(s, t, x, eta)
        assert np.max(np.linalg.norm(X, axis=1)) <= G0, spec.name


def test_ck_bound_examples():
    """|K|=2, C=1, T=1 -> G0 = 3e; küçük G0 ile G1 = e"""
    problem = make_problem(param_shear_field(1, 1))
    bounds = ck_bound(problem, 1)
    assert bounds["G0"] == pytest.approx(3.0 * math.e, rel=1e-12)
    assert bounds["G0"] == pytest.approx(8.15485, abs=1e-5)

    small = problem.model_copy(update={"K_lo": [-0.5], "K_hi": [0.5], "growth_C": 0.1,
                                       "ck_norms": {0: 1.0, 1: 1.0}})
    bounds = ck_bound(small, 1)
    assert bounds["G0"] < math.e
    assert bounds["G1"] == pytest.approx(math.e, rel=1e-12)
    assert bounds["Gk"] == bounds["G1"]


def test_ck_bound_higher_order():
    """Gk = max{G0, 2^k T^{k−1} V_k^{2k−1} e^{(2k−1)T V_1}}"""
    problem = make_problem(param_shear_field(1, 1)).model_copy(update={"ck_norms": {0: 1.0, 1: 1.0, 2: 1.0}})
    assert ck_bound(problem, 2)["Gk"] == pytest.approx(4.0 * math.exp(3.0), rel=1e-12)


def test_ck_bound_missing_norms():
    """Eksik norm -> CapabilityError"""
    problem = make_problem(param_shear_field(1, 1)).model_copy(update={"ck_norms": {0: 1.0}})
    with pytest.raises(CapabilityError):
        ck_bound(problem, 1)
    with pytest.raises(CapabilityError):
        hadamard_J_bound(problem)


def test_hadamard_bound_arithmetic():
    """n=1, G1=2 -> 2; n=2, G1=3 -> 18"""
    assert hadamard_bound(1, 2.0) == pytest.approx(2.0)
    assert hadamard_bound(2, 3.0) == pytest.approx(18.0)


def test_sampled_jacobian_within_hadamard_bound(rng):
    """|J| ≤ G_J"""
    problem = make_problem(linear_field(1, 0))
    s, t, x, eta = random_tuples(rng, problem, 300)
    J = FlowMap(problem).jacobian_factor(s, t, x, eta)
    assert np.all(J > 0.0)
    assert np.max(np.abs(J)) <= hadamard_J_bound(problem)


def test_liouville_matches_fd_determinant(tight, rng):
    """Liouville J ile sonlu fark determinantı 1e-5 içinde"""
    spec = inline_field(["sin(x0) + 0.3*x1", "0.5*x0*x1/(1 + x0**2)"], 2, 0, 1.0, [-1.0, -1.0], [1.0, 1.0])
    problem = VectorFieldProblem(name="inline", n=2, D=0, T=1.0, V=spec.V, div_V=spec.div_V,
                                 u0=ramp_initial(2), growth_C=spec.growth_C, K_lo=[-1.0, -1.0], K_hi=[1.0, 1.0])
    fm = FlowMap(problem, tight)
    s, t, x, eta = random_tuples(rng, problem, 200)
    assert np.max(np.abs(fm.jacobian_factor(s, t, x, eta) - fm.jacobian_fd(s, t, x, eta))) <= 1e-5


def test_divergence_free_jacobian_is_one(tight, rng):
    """div V = 0 -> J ≡ 1"""
    problem = make_problem(rotation_field(2, 1))
    s, t, x, eta = random_tuples(rng, problem, 100)
    J = FlowMap(problem, tight).jacobian_factor(s, t, x, eta)
    assert np.max(np.abs(J - 1.0)) <= 1e-8


def test_missing_divergence(rng):
    """div_V yoksa: yedek kapalı -> hata, açık -> sonlu fark"""
    problem = make_problem(rotation_field(2, 1)).model_copy(update={"div_V": None})
    s, t, x, eta = random_tuples(rng, problem, 20)
    with pytest.raises(CapabilityError):
        FlowMap(problem).jacobian_factor(s, t, x, eta)
    J = FlowMap(problem, allow_fd_fallback=True).jacobian_factor(s, t, x, eta)
    assert np.max(np.abs(J - 1.0)) <= 1e-5


def test_step_exhaustion_raises_stiffness():
    """Adım sınırı -> StiffnessError(last_state)"""
    fm = FlowMap(make_problem(linear_field(1, 0)), Settings(ode_max_steps=2))
    with pytest.raises(StiffnessError) as info:
        fm.flow(np.zeros(3), np.ones(3), np.ones((3, 1)))
    assert info.value.last_state is not None
    assert 0.0 <= info.value.sigma < 1.0


def test_reference_homogeneous_param_shear(tight, rng):
    """V = η: u = u₀(x − ηt)"""
    problem = make_problem(param_shear_field(1, 1))
    _, t, x, eta = random_tuples(rng, problem, 300)
    u = reference_solution(problem, Variant.HOMOGENEOUS, t, x, eta, FlowMap(problem, tight))
    expected = np.maximum(0.0, 1.0 - np.abs(x[:, 0] - eta[:, 0] * t))
    assert np.max(np.abs(u - expected)) <= 1e-8


def test_reference_source_closed_form(tight, rng):
    """V = c, f ≡ 1: u = u₀(x − ct) + t"""
    problem = make_problem(const_field(1, 0, [0.5]), f=lambda t, x, eta: np.ones(np.asarray(x).shape[0]))
    _, t, x, eta = random_tuples(rng, problem, 300)
    u = reference_solution(problem, "source", t, x, eta, FlowMap(problem, tight))
    expected = np.maximum(0.0, 1.0 - np.abs(x[:, 0] - 0.5 * t)) + t
    assert np.max(np.abs(u - expected)) <= 1e-8


def test_reference_conservative_closed_form(tight, rng):
    """V = x: u = u₀(x e^{−t}) e^{−t}"""
    problem = make_problem(linear_field(1, 0))
    _, t, x, eta = random_tuples(rng, problem, 300)
    u = reference_solution(problem, Variant.CONSERVATIVE, t, x, eta, FlowMap(problem, tight))
    expected = np.maximum(0.0, 1.0 - np.abs(x[:, 0] * np.exp(-t))) * np.exp(-t)
    assert np.max(np.abs(u - expected)) <= 1e-8


def test_reference_damped_closed_form(tight, rng):
    """a ≡ 1, V = 0.5: u = u₀(x − 0.5t) e^{−t}"""
    problem = make_problem(const_field(1, 0, [0.5]), a=lambda t, x, eta: np.ones(np.asarray(x).shape[0]))
    _, t, x, eta = random_tuples(rng, problem, 300)
    u = reference_solution(problem, Variant.DAMPED, t, x, eta, FlowMap(problem, tight))
    expected = np.maximum(0.0, 1.0 - np.abs(x[:, 0] - 0.5 * t)) * np.exp(-t)
    assert np.max(np.abs(u - expected)) <= 1e-8


def test_constancy_along_characteristics(tight, rng):
    """u(t, X(t,0,x₀,η), η) = u₀(x₀)"""
    problem = make_problem(rotation_field(2, 1))
    fm = FlowMap(problem, tight)
    _, t, x0, eta = random_tuples(rng, problem, 200)
    x = fm.flow(t, np.zeros(200), x0, eta)
    u = reference_solution(problem, Variant.HOMOGENEOUS, t, x, eta, fm)
    assert np.max(np.abs(u - problem.u0.evaluator(x0))) <= 1e-6


def test_conservative_equals_homogeneous_when_divergence_free(tight, rng):
    """div V = 0 iken iki referans çakışır"""
    problem = make_problem(rotation_field(2, 1))
    fm = FlowMap(problem, tight)
    _, t, x, eta = random_tuples(rng, problem, 200)
    cons = reference_solution(problem, Variant.CONSERVATIVE, t, x, eta, fm)
    homo = reference_solution(problem, Variant.HOMOGENEOUS, t, x, eta, fm)
    assert np.max(np.abs(cons - homo)) <= 1e-8


def test_reference_requires_fields(rng):
    """f veya a eksikse CapabilityError"""
    problem = make_problem(const_field(1, 0, [0.5]))
    with pytest.raises(CapabilityError):
        reference_solution(problem, Variant.SOURCE, 0.5, [0.1])
    with pytest.raises(CapabilityError):
        reference_solution(problem, Variant.DAMPED, 0.5, [0.1])


def test_single_point_reference_is_scalar():
    """Tek nokta -> skaler"""
    problem = make_problem(const_field(1, 0, [0.5]))
    u = reference_solution(problem, Variant.HOMOGENEOUS, 1.0, [0.5])
    assert np.ndim(u) == 0
    assert u == pytest.approx(1.0, abs=1e-8)


def test_rotation_requires_two_dimensions():
    with pytest.raises(ConfigError):
        rotation_field(3, 0)


def test_problem_from_config_constant_source():
    """Sabit kaynak için metaveri kesin, tahmin listesinde yok"""
    cfg = ExperimentConfig(problem="const", velocity="0.5", variant="source", n_params=0,
                           source="1", epsilons=[0.1])
    problem = problem_from_config(cfg, Settings(lipschitz_samples=256))
    assert problem.lip["f"] == 0.0
    assert problem.sup["f"] == 1.0
    assert problem.lip["u0"] == 1.0
    assert "lip_f" not in problem.estimated
    assert problem.f(np.zeros(2), np.zeros((2, 1)), np.zeros((2, 0))).tolist() == [1.0, 1.0]


def test_problem_from_config_unknown_key():
    """Bilinmeyen problem anahtarı"""
    with pytest.raises(ConfigError):
        problem_from_config(ExperimentConfig(problem="vortex", epsilons=[0.1]))
