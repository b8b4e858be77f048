import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgers_pinn import network
from burgers_pinn.network import Mlp


def random_net(dims, seed, box=None, jitter=0.3):
    lower, upper = box if box is not None else (None, None)
    net = network.init(dims, seed, lower, upper)
    rng = np.random.default_rng(seed + 1000)
    network.set_params(net, network.get_params(net) + jitter * rng.standard_normal(net.n_params))
    return net


def fd_channels(net, pts, h=1e-4):
    """Central differences of the plain forward pass, per input coordinate."""
    base = network.forward(net, pts)
    d, dd = [], []
    for i in range(net.n_in):
        e = np.zeros(net.n_in)
        e[i] = h
        fp, fm = network.forward(net, pts + e), network.forward(net, pts - e)
        d.append((fp - fm) / (2 * h))
        dd.append((fp - 2 * base + fm) / (h * h))
    return d, dd


def test_init_is_deterministic():
    a = network.get_params(network.init([2, 20, 20, 2], seed=9))
    b = network.get_params(network.init([2, 20, 20, 2], seed=9))
    assert a.tobytes() == b.tobytes()
    c = network.get_params(network.init([2, 20, 20, 2], seed=10))
    assert not np.array_equal(a, c)


def test_parameter_count():
    net = network.init([2, 20, 20, 20, 2], seed=0)
    assert net.n_params == 2 * 20 + 20 + 2 * (20 * 20 + 20) + 20 * 2 + 2 == 942
    assert network.get_params(net).size == 942


def test_glorot_bounds_and_zero_biases():
    net = network.init([3, 50, 50, 50, 1], seed=1)
    for W, b in zip(net.weights, net.biases):
        bound = np.sqrt(6.0 / sum(W.shape))
        assert np.all(np.abs(W) <= bound)
        assert np.all(b == 0.0)


@pytest.mark.parametrize("dims", [[], [2], [2, 0, 1]])
def test_init_rejects_bad_dims(dims):
    with pytest.raises(ValueError):
        network.init(dims, seed=0)


def test_zero_weights_pass_output_bias():
    net = network.init([2, 5, 5, 2], seed=0)
    network.set_params(net, np.zeros(net.n_params))
    net.biases[-1] = np.array([0.7, -0.2])
    for x in ([0.0, 0.0], [3.0, -1.0], [1e3, 2.5]):
        assert network.forward(net, np.array(x)).tolist() == [0.7, -0.2]
    jets = network.forward_jet(net, np.array([0.4, 0.1]))
    for jet in jets:
        assert list(jet.d) == [0.0, 0.0]
        assert list(jet.dd) == [0.0, 0.0]


def test_single_hidden_neuron_at_zero():
    net = Mlp([1, 1, 1], [np.ones((1, 1)), np.ones((1, 1))], [np.zeros(1), np.zeros(1)])
    assert network.forward(net, np.array([0.0])).tolist() == [0.0]


def test_dimension_mismatch_rejected():
    net = network.init([2, 4, 1], seed=0)
    with pytest.raises(ValueError):
        network.forward(net, np.zeros(3))
    with pytest.raises(ValueError):
        network.forward_jet(net, np.zeros((5, 3)))


@pytest.mark.parametrize("dims, box", [
    ([2, 20, 20, 20, 2], ([-np.pi, 0.0], [np.pi, 10.0])),
    ([3, 40, 40, 40, 40, 40, 1], ([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])),
    ([2, 8, 2], None),
])
def test_forward_matches_jet_value_bit_exactly(dims, box):
    net = random_net(dims, 4, box)
    pts = np.random.default_rng(0).uniform(-1, 1, size=(257, dims[0]))
    plain = network.forward(net, pts)
    jets = network.forward_jet(net, pts)
    for k, jet in enumerate(jets):
        assert jet.value.tobytes() == np.ascontiguousarray(plain[:, k]).tobytes()


def test_jet_channels_match_finite_differences():
    net = random_net([2, 10, 10, 2], 7, box=([-np.pi, 0.0], [np.pi, 10.0]))
    pts = np.random.default_rng(3).uniform([-3, 0.5], [3, 9.5], size=(200, 2))
    d, dd = fd_channels(net, pts, h=1e-3)
    jets = network.forward_jet(net, pts)
    for k, jet in enumerate(jets):
        for i in range(2):
            np.testing.assert_allclose(jet.d[i], d[i][:, k], rtol=1e-5, atol=1e-7)
            np.testing.assert_allclose(jet.dd[i], dd[i][:, k], rtol=1e-3, atol=1e-5)


def test_zero_weight_net_has_zero_derivatives_for_single_point():
    net = network.init([3, 6, 1], seed=0)
    network.set_params(net, np.zeros(net.n_params))
    (jet,) = network.forward_jet(net, [0.1, 0.2, 0.3])
    assert jet.value == 0.0 and list(jet.d) == [0.0] * 3 and list(jet.dd) == [0.0] * 3


def test_normalization_chain_rule():
    lower, upper = np.array([-np.pi, 0.0]), np.array([np.pi, 10.0])
    scale = 2.0 / (upper - lower)
    shift = -1.0 - lower * scale
    normed = random_net([2, 12, 12, 1], 2, box=(lower, upper))
    raw = network.init([2, 12, 12, 1], seed=0)
    network.set_params(raw, network.get_params(normed))
    pts = np.random.default_rng(1).uniform(lower, upper, size=(50, 2))
    (a,) = network.forward_jet(normed, pts)
    (b,) = network.forward_jet(raw, pts * scale + shift)
    np.testing.assert_allclose(a.value, b.value, rtol=1e-14, atol=1e-15)
    for i in range(2):
        np.testing.assert_allclose(a.d[i], b.d[i] * scale[i], rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(a.dd[i], b.dd[i] * scale[i] ** 2, rtol=1e-12, atol=1e-15)


def test_untracked_second_derivatives_are_none_and_rest_unchanged():
    net = random_net([3, 8, 8, 2], 5)
    pts = np.random.default_rng(2).uniform(0, 1, size=(20, 3))
    full = network.forward_jet(net, pts)
    part = network.forward_jet(net, pts, second=(0, 1))
    for f, p in zip(full, part):
        assert p.dd[2] is None
        assert p.value.tobytes() == f.value.tobytes()
        for i in range(3):
            np.testing.assert_allclose(p.d[i], f.d[i], rtol=0, atol=1e-15)
        for i in range(2):
            np.testing.assert_allclose(p.dd[i], f.dd[i], rtol=0, atol=1e-14)


def test_set_get_round_trip():
    net = network.init([2, 6, 6, 2], seed=3)
    theta = np.random.default_rng(0).standard_normal(net.n_params)
    network.set_params(net, theta)
    assert network.get_params(net).tobytes() == theta.tobytes()
    pts = np.random.default_rng(1).uniform(size=(10, 2))
    before = network.forward(net, pts)
    network.set_params(net, network.get_params(net))
    assert network.forward(net, pts).tobytes() == before.tobytes()
    with pytest.raises(ValueError):
        network.set_params(net, theta[:-1])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), factor=st.floats(-3, 3))
def test_output_is_linear_in_last_layer(seed, factor):
    net = random_net([2, 7, 7, 2], seed % 1000)
    pts = np.random.default_rng(seed).uniform(-1, 1, size=(16, 2))
    base = network.forward(net, pts)
    net.weights[-1] = net.weights[-1] * factor
    net.biases[-1] = net.biases[-1] * factor
    np.testing.assert_allclose(network.forward(net, pts), factor * base, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("dims, box", [
    ([2, 40, 40, 40, 40, 2], ([-np.pi, 0.0], [np.pi, 10.0])),
    ([2, 60, 60, 60, 60, 60, 60, 60, 2], ([-10.0, 0.0], [10.0, 10.0])),
    ([3, 40, 40, 40, 40, 1], ([0.0, 0.0, 0.0], [1.0, 1.0, 8.0])),
])
def test_initial_preactivations_stay_out_of_saturation(dims, box):
    net = network.init(dims, seed=42, lower=box[0], upper=box[1])
    pts = np.random.default_rng(0).uniform(box[0], box[1], size=(2000, dims[0]))
    a = net.normalize(pts)
    pre = []
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        z = a @ W + b
        pre.append(np.max(np.abs(z), axis=1))
        a = np.tanh(z)
    worst = np.max(pre, axis=0)
    assert np.mean(worst < 10.0) >= 0.99


def test_paper_conforming_flag():
    assert network.init(network.hidden_dims(2, 4, 40, 2), 0).paper_conforming
    assert not network.init(network.hidden_dims(2, 2, 8, 2), 0).paper_conforming


@pytest.mark.parametrize("box", [None, ([0.0, 0.0, 0.0], [1.0, 1.0, 8.0])])
def test_checkpoint_round_trip_is_bit_exact(tmp_path, box):
    net = random_net([3, 9, 9, 2], 17, box)
    path = tmp_path / "net.bin"
    network.save_checkpoint(net, path)
    back = network.load_checkpoint(path)
    assert back.layer_dims == net.layer_dims and back.seed == net.seed
    assert network.get_params(back).tobytes() == network.get_params(net).tobytes()
    pts = np.random.default_rng(0).uniform(size=(30, 3))
    assert network.forward(back, pts).tobytes() == network.forward(net, pts).tobytes()
    network.save_checkpoint(back, tmp_path / "again.bin")
    assert (tmp_path / "again.bin").read_bytes() == path.read_bytes()


def test_checkpoint_layout(tmp_path):
    net = network.init([2, 3, 1], seed=5)
    path = tmp_path / "c.bin"
    network.save_checkpoint(net, path)
    data = path.read_bytes()
    # magic + K + dims + seed + box flag + P + params
    assert len(data) == 8 + 4 + 3 * 4 + 8 + 1 + 8 + 8 * net.n_params
    assert data[:8] == b"BPINNCK1"
    assert int.from_bytes(data[8:12], "little") == 3
    assert int.from_bytes(data[24:32], "little", signed=True) == 5


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        network.init([2, 3, 1], seed=-1)


def test_checkpoint_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"not a checkpoint")
    with pytest.raises(ValueError):
        network.load_checkpoint(bad)
    net = network.init([2, 3, 1], seed=0)
    good = tmp_path / "good.bin"
    network.save_checkpoint(net, good)
    bad.write_bytes(good.read_bytes() + b"\0")
    with pytest.raises(ValueError):
        network.load_checkpoint(bad)
