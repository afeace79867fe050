import math

import numpy as np
import pytest

from relu_transport.core import Settings, InputShapeError, ContractError, NetworkParseError
from relu_transport.services.network import (
    AffineMap, Network, serialize, deserialize, random_network, second_differences,
)
from relu_transport.services.graph_builder import NetworkBuilder


@pytest.fixture
def rng():
    """Sabit tohumlu üreteç"""
    return np.random.default_rng(7)


@pytest.fixture
def skip_net():
    """x + ϱ(x) ağı"""
    hidden = AffineMap(1, [1], [0], [0], [1.0], [0.0])
    out = AffineMap(1, [1, 1], [0, 0], [0, 1], [1.0, 1.0], [0.0])
    return Network(1, [hidden, out])


def test_identity_one_layer():
    """Tek katmanlı afin özdeşlik"""
    net = Network(2, [AffineMap(2, [2], [0, 1], [0, 1], [1.0, 1.0])])
    assert np.array_equal(net.realize([1.5, -2.0]), [1.5, -2.0])
    report = net.size()
    assert (report.weights, report.layers, report.neurons) == (2, 1, 4)


def test_hidden_block_annihilates_negative():
    """Sadece gizli bloğu okuyan ağ negatif girişte 0 verir"""
    hidden = AffineMap(1, [1], [0], [0], [1.0])
    out = AffineMap(1, [1, 1], [0], [1], [1.0])
    net = Network(1, [hidden, out])
    assert net.realize([-3.0])[0] == 0.0


def test_skip_connection(skip_net):
    """x + ϱ(x) elle ileri geçiş"""
    assert skip_net.realize([2.0])[0] == 4.0
    assert skip_net.realize([-2.0])[0] == -2.0
    assert skip_net.size().weights == 3
    assert skip_net.size().layers == 2


def test_last_layer_has_no_activation():
    """Son katmana ReLU uygulanmaz"""
    hidden = AffineMap(1, [1], [0], [0], [1.0])
    out = AffineMap(1, [1, 1], bias=[-1e6])
    net = Network(1, [hidden, out])
    assert net.realize([0.3])[0] == -1e6


def test_triplets_are_canonical():
    """Tekrar eden üçlüler toplanır, sıfırlar atılır"""
    layer = AffineMap(2, [3], [1, 0, 0, 1], [2, 1, 1, 0], [1.0, 2.0, -2.0, 0.0], [0.0, 3.0])
    assert list(layer.row_idx) == [1]
    assert list(layer.col_idx) == [2]
    assert layer.weights == 2


def test_width_telescoping_enforced():
    """Blok genişlikleri uyuşmazsa hata"""
    hidden = AffineMap(2, [1], [0], [0], [1.0])
    bad = AffineMap(1, [1, 1], [0], [0], [1.0])
    with pytest.raises(ContractError):
        Network(1, [hidden, bad])
    with pytest.raises(ContractError):
        Network(1, [])


def test_input_shape_error(skip_net):
    """Yanlış giriş boyutu"""
    with pytest.raises(InputShapeError):
        skip_net.realize([1.0, 2.0])
    with pytest.raises(InputShapeError):
        skip_net.realize(np.zeros((4, 3)))


def test_batch_matches_single(rng):
    """Yığın değerlendirme tekil değerlendirmeyle aynı"""
    net = random_network(rng, 3, 2, 4)
    X = rng.normal(size=(50, 3))
    batch = net.realize(X)
    for i in range(5):
        assert np.array_equal(batch[i], net.realize(X[i]))


def test_threads_and_chunks_are_bit_identical(rng):
    """İş parçacığı sayısı sonucu değiştirmez"""
    net = random_network(rng, 3, 1, 5)
    X = rng.normal(size=(1000, 3))
    small = Settings(eval_chunk_bytes=4096, threads=1)
    threaded = Settings(eval_chunk_bytes=4096, threads=4)
    assert np.array_equal(net.realize(X, small), net.realize(X, threaded))


def test_serialize_round_trip(rng):
    """Serileştirme gidiş-dönüş"""
    net = random_network(rng, 4, 2, 5)
    data = serialize(net)
    assert data.startswith(b"relunet-v1\n")
    loaded = deserialize(data)
    assert loaded.size() == net.size()
    assert all(a.same_as(b) for a, b in zip(net.layers, loaded.layers))
    X = rng.normal(size=(100, 4))
    assert np.array_equal(net.realize(X), loaded.realize(X))


def test_deserialize_rejects_empty_layer_list():
    """Boş katman listesi reddedilir"""
    with pytest.raises(NetworkParseError):
        deserialize(b"relunet-v1\ninput_dim 2\nlayers 0\nend\n")


def test_deserialize_reports_offset(skip_net):
    """Bozuk satır bayt konumuyla raporlanır"""
    text = serialize(skip_net).decode()
    broken = text.replace("matrix 1", "matrix one", 1)
    with pytest.raises(NetworkParseError) as info:
        deserialize(broken.encode())
    assert info.value.offset == broken.index("matrix one")
    with pytest.raises(NetworkParseError) as info:
        deserialize(b"relunet-v2\n")
    assert info.value.offset == 0


def test_piecewise_affine_along_segments(rng):
    """Doğru parçası boyunca ikinci farklar seyrek"""
    net = random_network(rng, 2, 1, 3, max_width=3)
    for _ in range(10):
        a, b = rng.uniform(-1, 1, size=(2, 2))
        dd = second_differences(net, a, b, samples=2049)
        kinks = np.count_nonzero(np.abs(dd) > 1e-9)
        # her gizli katman mevcut parçaları nöron başına en fazla bir kez böler
        pieces = math.prod(w + 1 for w in net.hidden_widths)
        # her kırılma en fazla iki ardışık ikinci farkı etkiler
        assert kinks <= 2 * (pieces - 1)
        assert kinks < len(dd) // 4


def test_builder_places_neurons_by_depth():
    """Builder katman yerleşimi"""
    builder = NetworkBuilder(1)
    x = builder.input(0)
    h = builder.relu(x)
    g = builder.relu(h - 1.0)
    late = builder.relu(x * 2.0, layer=3)
    net = builder.build([g + late - x])
    assert net.depth == 4
    assert net.hidden_widths == [1, 1, 1]
    for value in (-1.0, 0.5, 3.0):
        expected = max(max(value, 0.0) - 1.0, 0.0) + max(2 * value, 0.0) - value
        assert abs(net.realize([value])[0] - expected) < 1e-15
