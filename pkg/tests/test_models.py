import numpy as np
import pytest

from clarkit.autodiff import ShapeMismatchError, Tape, Tensor, grad_check
from clarkit.graphs import build_graph, propagation_matrix
from clarkit.models import (
    GcnModel,
    accuracy,
    gcn_forward,
    init_gcn,
    init_mlp,
    mlp_forward,
    model_params,
)


def test_depth_one_identity_weights_identity_prop():
    x = np.array([[1.0, -2.0], [3.0, 4.0]])
    model = GcnModel(weights=[Tensor(np.eye(2), requires_grad=True)])
    out = gcn_forward(Tape(), model, x, np.eye(2))
    assert np.array_equal(out.value, x)


def test_self_loop_propagation_averages_rows():
    # P2 with self-loops normalizes to the all-0.5 matrix, averaging both rows
    g = build_graph(2, [(0, 1)])
    prop = propagation_matrix(g)
    assert np.allclose(prop, [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)
    x = np.array([[2.0, 0.0], [0.0, 2.0]])
    model = GcnModel(weights=[Tensor(np.eye(2), requires_grad=True)])
    out = gcn_forward(Tape(), model, x, prop)
    assert np.allclose(out.value, [[1.0, 1.0], [1.0, 1.0]], atol=1e-12)


def test_zero_features_give_zero_logits():
    rng = np.random.default_rng(0)
    model = init_gcn(rng, 4, 8, 3, depth=2)
    out = gcn_forward(Tape(), model, np.zeros((5, 4)), np.eye(5))
    assert np.array_equal(out.value, np.zeros((5, 3)))


def test_identity_path_on_nonnegative_inputs():
    x = np.abs(np.random.default_rng(1).standard_normal((4, 3)))
    model = GcnModel(weights=[Tensor(np.eye(3), requires_grad=True) for _ in range(3)])
    out = gcn_forward(Tape(), model, x, np.eye(4))
    assert np.allclose(out.value, x, atol=1e-12)


def test_layer_dims_chain():
    rng = np.random.default_rng(2)
    model = init_gcn(rng, 7, 5, 3, depth=4)
    shapes = [w.value.shape for w in model.weights]
    assert shapes == [(7, 5), (5, 5), (5, 5), (5, 3)]
    mlp = init_mlp(rng, 7, 5, 3, depth=2)
    assert [w.value.shape for w in mlp.weights] == [(7, 5), (5, 3)]
    assert [b.value.shape for b in mlp.biases] == [(5,), (3,)]
    assert len(model_params(mlp)) == 4


def test_shape_mismatch_on_bad_prop():
    model = GcnModel(weights=[Tensor(np.eye(2), requires_grad=True)])
    with pytest.raises(ShapeMismatchError):
        gcn_forward(Tape(), model, np.zeros((3, 2)), np.eye(2))


def test_mlp_forward_uses_bias():
    mlp = init_mlp(np.random.default_rng(3), 2, 4, 2, depth=2)
    for b in mlp.biases:
        b.value[:] = 1.0
    out = mlp_forward(Tape(), mlp, np.zeros((3, 2)))
    # zero inputs, unit biases: first layer outputs relu(1)=1, second 1 @ W + 1
    expected = np.ones((1, 4)) @ mlp.weights[1].value + 1.0
    assert np.allclose(out.value, np.repeat(expected, 3, axis=0), atol=1e-12)


def test_accuracy_helper():
    logits = np.array([[2.0, 0.0], [0.0, 2.0], [1.0, 0.0]])
    labels = [0, 1, 1]
    assert accuracy(logits, labels) == pytest.approx(2 / 3)
    assert accuracy(logits, labels, mask=[True, True, False]) == 1.0
    with pytest.raises(ValueError):
        accuracy(logits, labels, mask=[False, False, False])


def test_gcn_cross_entropy_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    n, d, c = 10, 5, 3
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3]
    g = build_graph(n, edges)
    prop = propagation_matrix(g)
    x = rng.standard_normal((n, d))
    labels = rng.integers(0, c, size=n)
    mask = rng.random(n) < 0.6
    mask[0] = True
    model = init_gcn(rng, d, 6, c, depth=2)

    for k, w in enumerate(model.weights):

        def loss_fn(tape, theta):
            weights = list(model.weights)
            weights[k] = theta
            logits = gcn_forward(tape, GcnModel(weights=weights), x, prop)
            return tape.nll_loss(tape.log_softmax_rows(logits), labels, mask)

        err = grad_check(loss_fn, w, eps=1e-5, rng=k)
        assert err < 1e-4, f"layer {k} gradient error {err}"
