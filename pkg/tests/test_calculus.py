import math

import numpy as np
import pytest
from pydantic import ValidationError

from relu_transport.core import CompositionError, ContractError
from relu_transport.models import MulConfig
from relu_transport.services.network import random_network
from relu_transport.services.calculus import (
    sparse_concat, parallelize, sum_nets, multiply_nets, selector_net, const_shift_net,
    identity_net, duplication_net, scale_output, mul_gadget_net, gadget_levels,
    gadget_constant_c2, levels_for_error, product_error_bound, emit_product,
    concat_weights, input_weights, product_weight_bound, GADGET_C1,
)
from relu_transport.services.graph_builder import NetworkBuilder


@pytest.fixture
def rng():
    """Sabit tohumlu üreteç"""
    return np.random.default_rng(11)


def test_concat_depth_weights_and_values(rng):
    """Ardışık bağlama: L toplanır, W ≤ 2W₁+2W₂, değer oracle'ı"""
    for _ in range(50):
        d, m = rng.integers(1, 4, size=2)
        phi2 = random_network(rng, int(d), int(m), int(rng.integers(1, 4)))
        phi1 = random_network(rng, int(m), 1, int(rng.integers(1, 4)))
        comp = sparse_concat(phi1, phi2)
        assert comp.depth == phi1.depth + phi2.depth
        assert comp.weights == concat_weights(phi1, phi2)
        assert comp.weights <= 2 * phi1.weights + 2 * phi2.weights
        X = rng.normal(size=(100, int(d)))
        assert np.max(np.abs(comp.realize(X) - phi1.realize(phi2.realize(X)))) <= 1e-12


def test_concat_identity():
    """identity ⊙ identity = identity"""
    net = sparse_concat(identity_net(3), identity_net(3))
    x = np.array([0.5, -1.25, 2.0])
    assert np.array_equal(net.realize(x), x)


def test_concat_dimension_mismatch(rng):
    """Boyut uyuşmazlığı"""
    with pytest.raises(CompositionError):
        sparse_concat(random_network(rng, 2, 1, 2), random_network(rng, 2, 3, 2))


def test_concat_associative(rng):
    """(A⊙B)⊙C = A⊙(B⊙C)"""
    C = random_network(rng, 2, 2, 2)
    B = random_network(rng, 2, 2, 3)
    A = random_network(rng, 2, 1, 2)
    X = rng.normal(size=(100, 2))
    left = sparse_concat(sparse_concat(A, B), C).realize(X)
    right = sparse_concat(A, sparse_concat(B, C)).realize(X)
    assert np.max(np.abs(left - right)) <= 1e-12


def test_parallelize_heterogeneous_depths(rng):
    """Paralelleştirme: W toplanır, çıkışlar sırayla"""
    phis = [random_network(rng, 3, int(rng.integers(1, 3)), depth) for depth in (1, 4, 2)]
    par = parallelize(phis)
    assert par.depth == 4
    assert par.weights == sum(p.weights for p in phis)
    X = rng.normal(size=(100, 3))
    stacked = np.hstack([p.realize(X) for p in phis])
    assert np.max(np.abs(par.realize(X) - stacked)) <= 1e-12


def test_parallelize_single_and_mismatch(rng):
    """Tek ağ ve farklı giriş boyutu"""
    ident = identity_net(2)
    assert np.array_equal(parallelize([ident]).realize([1.0, 2.0]), [1.0, 2.0])
    with pytest.raises(CompositionError):
        parallelize([identity_net(2), identity_net(3)])


def test_sum_nets(rng):
    """Toplam ağı"""
    phi1 = random_network(rng, 2, 1, 3)
    phi2 = random_network(rng, 2, 1, 2)
    total = sum_nets(phi1, phi2)
    assert total.depth == max(phi1.depth, phi2.depth)
    assert total.weights <= phi1.weights + phi2.weights
    X = rng.normal(size=(100, 2))
    assert np.max(np.abs(total.realize(X)[:, 0] - phi1.realize(X)[:, 0] - phi2.realize(X)[:, 0])) <= 1e-12


def test_sum_with_negation_is_zero(rng):
    """Φ ⊕ (−Φ) = 0"""
    phi = random_network(rng, 2, 1, 3)
    zero = sum_nets(phi, scale_output(phi, -1.0))
    grid = np.stack(np.meshgrid(np.linspace(-2, 2, 31), np.linspace(-2, 2, 31)), -1).reshape(-1, 2)
    assert np.max(np.abs(zero.realize(grid))) <= 1e-12


def test_sum_disjoint_supports_exact_weights():
    """Ayrık son katman destekleri: W = W₁ + W₂"""
    phi1 = const_shift_net(2, [[1.0, 0.0]], [0.0])
    phi2 = const_shift_net(2, [[0.0, 2.0]], [1.0])
    assert sum_nets(phi1, phi2).weights == 3


def test_sum_requires_scalar_outputs():
    """Çıkış boyutu 1 olmalı"""
    with pytest.raises(ContractError):
        sum_nets(identity_net(2), selector_net(2, [0]))


def test_parallel_then_sum_matches_sum(rng):
    """P sonra [1 1] = sum_nets"""
    phi1 = random_network(rng, 2, 1, 2)
    phi2 = random_network(rng, 2, 1, 3)
    par = parallelize([phi1, phi2])
    adder = const_shift_net(2, [[1.0, 1.0]], [0.0])
    X = rng.normal(size=(100, 2))
    assert np.max(np.abs(sparse_concat(adder, par).realize(X) - sum_nets(phi1, phi2).realize(X))) <= 1e-12


def test_selectors_and_duplication(rng):
    """Seçici ve çoğaltma ağları"""
    tau = selector_net(4, [0])
    assert tau.realize([0.3, 0.1, 2.0, 0.7])[0] == 0.3
    assert selector_net(5, range(1, 4)).weights == 3
    dup = duplication_net(2, 1)
    z = rng.normal(size=4)
    assert np.array_equal(dup.realize(z), np.concatenate([[z[0]], z]))
    with pytest.raises(ContractError):
        selector_net(3, [3])


def test_scale_output_exact():
    """Çıkış ölçekleme ek ağırlık getirmez"""
    phi = const_shift_net(1, [[2.0]], [0.5])
    scaled = scale_output(phi, 3.0)
    assert scaled.weights == phi.weights
    assert scaled.realize([1.0])[0] == 7.5


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_multiplication_gadget_grid(eps):
    """201×201 ızgarada |×̃ − xy| ≤ ε, M = 2"""
    gadget = mul_gadget_net(MulConfig(epsilon=eps, bound_M=2.0))
    axis = np.linspace(-2.0, 2.0, 201)
    X, Y = np.meshgrid(axis, axis)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    err = np.abs(gadget.realize(pts)[:, 0] - pts[:, 0] * pts[:, 1])
    assert err.max() <= eps


def test_multiply_constant_factors():
    """0.5 · 0.5 sabit çarpanlar"""
    half = const_shift_net(1, [[0.0]], [0.5])
    t = np.linspace(0, 1, 1000)[:, None]
    for eps in (1e-1, 1e-2, 1e-3):
        prod = multiply_nets(half, half, MulConfig(epsilon=eps, bound_M=1.0))
        assert np.max(np.abs(prod.realize(t)[:, 0] - 0.25)) <= eps


def test_multiply_zero_factor():
    """Sıfır çarpan"""
    zero = const_shift_net(1, [[0.0]], [0.0])
    ident = identity_net(1)
    prod = multiply_nets(zero, ident, MulConfig(epsilon=1e-3, bound_M=1.0))
    t = np.linspace(-1, 1, 101)[:, None]
    assert np.max(np.abs(prod.realize(t))) <= 1e-3


def test_multiply_size_bound(rng):
    """W ≤ c₁ ln(1/ε) + c₂ + 2W₁ + 2W₂, c₂ sertifikadaki değer"""
    for eps in (1e-1, 1e-2, 1e-4):
        cfg = MulConfig(epsilon=eps, bound_M=5.0)
        gadget = mul_gadget_net(cfg)
        for _ in range(10):
            phi1 = random_network(rng, 2, 1, int(rng.integers(1, 4)))
            phi2 = random_network(rng, 2, 1, int(rng.integers(1, 4)))
            prod = multiply_nets(phi1, phi2, cfg)
            assert prod.weights == concat_weights(gadget, parallelize([phi1, phi2]))
            assert prod.weights <= product_weight_bound(phi1, phi2, cfg)
            assert prod.weights <= GADGET_C1 * math.log(1 / eps) + gadget_constant_c2(cfg) \
                + 2 * phi1.weights + 2 * phi2.weights + 1e-9


def test_gadget_input_weights_are_doubled():
    """⊙ dış ağın giriş ağırlıklarını ikiye katlar; c₂ bunu içerir"""
    cfg = MulConfig(epsilon=1e-2, bound_M=2.0)
    gadget = mul_gadget_net(cfg)
    assert input_weights(gadget) > 0
    c2 = gadget_constant_c2(cfg)
    assert c2 == pytest.approx(gadget.weights + input_weights(gadget) - GADGET_C1 * math.log(100.0))
    assert c2 > gadget.weights - GADGET_C1 * math.log(100.0)


def test_gadget_weights_affine_in_log():
    """W(×) ln(1/ε) içinde afin (göreli artık < %5)"""
    eps = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    W = np.array([mul_gadget_net(MulConfig(epsilon=e, bound_M=2.0)).weights for e in eps], dtype=float)
    x = np.log(1.0 / eps)
    slope, intercept = np.polyfit(x, W, 1)
    resid = W - (slope * x + intercept)
    assert np.sqrt(np.mean(resid ** 2)) < 0.05 * (W.max() - W.min())
    assert math.isfinite(gadget_constant_c2(MulConfig(epsilon=1e-2, bound_M=2.0)))


def test_gadget_level_rules():
    """Seviye kuralları"""
    assert gadget_levels(0.5, 0.1) == 1
    assert gadget_levels(1e-2, 1.0) == math.ceil(math.log2(1200))
    m = levels_for_error(1e-4, 2.0)
    assert product_error_bound(m, 2.0) <= 1e-4 < product_error_bound(m - 1, 2.0)


def test_emit_product_with_explicit_levels():
    """Builder üzerinde açık seviyeli çarpım"""
    builder = NetworkBuilder(2)
    x, y = builder.inputs()
    m = levels_for_error(1e-3, 1.0)
    net = builder.build([emit_product(builder, x, y, 1.0, levels=m)])
    pts = np.random.default_rng(0).uniform(-1, 1, size=(2000, 2))
    assert np.max(np.abs(net.realize(pts)[:, 0] - pts[:, 0] * pts[:, 1])) <= 1e-3


def test_mul_config_range():
    """ε aralık dışı yapılandırma hatası"""
    with pytest.raises(ValidationError):
        MulConfig(epsilon=1.5, bound_M=1.0)
    with pytest.raises(ValueError):
        MulConfig(epsilon=0.1, bound_M=-1.0)
