import numpy as np
import pytest

from waverom.nnet import FeedForwardNet, MomentumSGD


def test_zero_weights_output_last_bias(rng):
    net = FeedForwardNet([3, 4, 2], seed=0)
    for w in net.weights:
        w[...] = 0.0
    net.biases[-1][...] = [1.5, -2.0]
    out = net.forward(rng.normal(size=(5, 3)))
    assert np.allclose(out, [1.5, -2.0])


def test_hidden_activations_bounded(rng):
    net = FeedForwardNet([2, 16, 16, 4], seed=1)
    x = rng.normal(size=(50, 2)) * 2.0
    _, (activations, _) = net.forward_cached(x)
    for hidden in activations[1:-1]:
        assert np.all(np.abs(hidden) < 1.0)
    # saturation never escapes [-1, 1] even for huge inputs
    _, (activations, _) = net.forward_cached(rng.normal(size=(10, 2)) * 1e6)
    for hidden in activations[1:-1]:
        assert np.all(np.abs(hidden) <= 1.0)


def test_dimension_mismatch(rng):
    net = FeedForwardNet([3, 4, 2], seed=0)
    with pytest.raises(ValueError, match="input dim"):
        net.forward(rng.normal(size=(5, 4)))


def test_init_deterministic_and_glorot_bounded():
    a = FeedForwardNet([4, 8, 3], seed=7)
    b = FeedForwardNet([4, 8, 3], seed=7)
    for wa, wb in zip(a.parameters(), b.parameters()):
        assert np.array_equal(wa, wb)
    for w, (fan_in, fan_out) in zip(a.weights, [(4, 8), (8, 3)]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        assert np.abs(w).max() <= bound


def _loss_and_grads(net, x, target):
    pred, cache = net.forward_cached(x)
    residual = pred - target
    loss = float(np.sum(residual**2))
    grads, _ = net.backward(cache, 2.0 * residual)
    return loss, grads


def _numeric_grads(net, x, target, eps=1e-6):
    grads = []
    for p in net.parameters():
        g = np.zeros_like(p)
        flat = p.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(np.sum((net.forward(x) - target) ** 2))
            flat[i] = orig - eps
            down = float(np.sum((net.forward(x) - target) ** 2))
            flat[i] = orig
            g.ravel()[i] = (up - down) / (2.0 * eps)
        grads.append(g)
    return grads


@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_central_differences(seed):
    rng = np.random.default_rng(seed)
    sizes = [2, int(rng.integers(3, 6)), int(rng.integers(3, 6)), int(rng.integers(1, 4))]
    net = FeedForwardNet(sizes, seed=seed)
    # inputs through the periodic sin/cos embedding
    phase = rng.uniform(0, 2 * np.pi, size=8)
    x = np.stack([np.sin(phase), np.cos(phase)], axis=1)
    target = rng.normal(size=(8, sizes[-1]))
    _, analytic = _loss_and_grads(net, x, target)
    numeric = _numeric_grads(net, x, target)
    for a, n in zip(analytic, numeric):
        denom = max(np.abs(n).max(), 1e-8)
        assert np.abs(a - n).max() / denom <= 1e-5


def test_input_gradient_matches_finite_differences(rng):
    net = FeedForwardNet([3, 5, 2], seed=2)
    x = rng.normal(size=(4, 3))
    target = rng.normal(size=(4, 2))
    pred, cache = net.forward_cached(x)
    _, d_input = net.backward(cache, 2.0 * (pred - target))
    eps = 1e-6
    numeric = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        bumped = x.copy()
        bumped[idx] += eps
        up = float(np.sum((net.forward(bumped) - target) ** 2))
        bumped[idx] -= 2 * eps
        down = float(np.sum((net.forward(bumped) - target) ** 2))
        numeric[idx] = (up - down) / (2 * eps)
    assert np.abs(d_input - numeric).max() <= 1e-5 * max(np.abs(numeric).max(), 1e-8)


def test_momentum_sgd_converges_quadratic():
    target = np.array([3.0, -1.0])
    p = [np.zeros(2)]
    opt = MomentumSGD(p, lr=0.1, momentum=0.9)
    for _ in range(500):
        opt.step([2.0 * (p[0] - target)])
    assert np.allclose(p[0], target, atol=1e-6)


def test_momentum_sgd_step_decay():
    p = [np.zeros(1)]
    opt = MomentumSGD(p, lr=1.0, momentum=0.0, decay_every=2, decay_factor=0.5)
    for _ in range(4):
        opt.step([np.zeros(1)])
    assert opt.lr == pytest.approx(0.25)


def test_serialization_round_trip(rng):
    net = FeedForwardNet([2, 6, 3], seed=4)
    clone = FeedForwardNet.from_dict(net.to_dict())
    x = rng.normal(size=(5, 2))
    assert np.array_equal(net.forward(x), clone.forward(x))
