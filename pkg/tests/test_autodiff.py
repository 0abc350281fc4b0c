import math

import numpy as np
import pytest

from clarkit.autodiff import (
    EmptyMaskError,
    NonFiniteLossError,
    ShapeMismatchError,
    Tape,
    Tensor,
    grad_check,
)
from clarkit.graphs import LaplacianKind, build_graph, laplacian


def scalar_sum(tape, t):
    # reduce an arbitrary tensor to a scalar through trace_quad with identity
    n = t.value.shape[0]
    return tape.trace_quad(t, np.eye(n))


class TestForwardValues:
    def test_trace_quad_single_edge(self):
        lap = laplacian(build_graph(2, [(0, 1)]), LaplacianKind.UNNORMALIZED)
        tape = Tape()
        h = Tensor([[1.0], [0.0]], requires_grad=True)
        out = tape.trace_quad(h, lap)
        assert out.item() == 1.0

    def test_trace_quad_equals_edge_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(2, 13))
            edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.5]
            g = build_graph(n, edges)
            h = rng.standard_normal((n, 3))
            lap = laplacian(g, LaplacianKind.UNNORMALIZED)
            got = Tape().trace_quad(Tensor(h), lap).item()
            want = sum(((h[u] - h[v]) ** 2).sum() for u, v in g.edges)
            assert abs(got - want) < 1e-8

    def test_relu(self):
        tape = Tape()
        a = Tensor([[-1.0, 2.0]], requires_grad=True)
        out = tape.relu(a)
        assert np.array_equal(out.value, [[0.0, 2.0]])
        loss = scalar_sum(tape, out)  # sum of squares of relu output
        tape.backward(loss)
        # d(sum relu(a)^2)/da = 2*relu(a)*1[a>0]
        assert np.array_equal(a.grad, [[0.0, 4.0]])

    def test_nll_uniform_logits(self):
        for c in (2, 3, 7):
            tape = Tape()
            logits = Tensor(np.zeros((4, c)), requires_grad=True)
            logp = tape.log_softmax_rows(logits)
            loss = tape.nll_loss(logp, np.zeros(4, dtype=int), np.ones(4, dtype=bool))
            assert abs(loss.item() - math.log(c)) < 1e-12

    def test_log_softmax_rows_normalize(self):
        rng = np.random.default_rng(1)
        a = Tensor(rng.standard_normal((5, 4)) * 10)
        out = Tape().log_softmax_rows(a)
        sums = np.exp(out.value).sum(axis=1)
        assert np.max(np.abs(sums - 1.0)) < 1e-10

    def test_mse(self):
        tape = Tape()
        pred = Tensor([[1.0, 2.0]], requires_grad=True)
        loss = tape.mse_loss(pred, np.array([[0.0, 0.0]]))
        assert loss.item() == 2.5

    def test_clamp_values(self):
        tape = Tape()
        assert tape.clamp(Tensor(5.0), 0.0, 1.0).item() == 1.0
        assert tape.clamp(Tensor(-1.0), 0.0, 1.0).item() == 0.0
        assert tape.clamp(Tensor(0.5), 0.0, 1.0).item() == 0.5
        assert tape.clamp(Tensor(0.5), 0.0, math.inf).item() == 0.5


class TestBackward:
    def test_grad_sums_over_uses(self):
        tape = Tape()
        x = Tensor([[2.0]], requires_grad=True)
        y = tape.add(x, x)  # 2x
        loss = tape.trace_quad(y, np.eye(1))  # (2x)^2
        tape.backward(loss)
        assert x.grad[0, 0] == pytest.approx(8 * 2.0)  # d(4x^2)/dx = 8x

    def test_matmul_grads(self):
        rng = np.random.default_rng(2)
        a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        b = Tensor(rng.standard_normal((4, 2)), requires_grad=True)
        tape = Tape()
        out = tape.matmul(a, b)
        loss = scalar_sum(tape, out)
        tape.backward(loss)
        assert a.grad.shape == (3, 4)
        assert b.grad.shape == (4, 2)

    def test_clamp_zero_gradient_when_saturated(self):
        lap = laplacian(build_graph(2, [(0, 1)]), LaplacianKind.UNNORMALIZED)
        h = Tensor([[3.0], [0.0]], requires_grad=True)
        tape = Tape()
        clamped = tape.clamp(tape.trace_quad(h, lap), 0.0, 1.0)  # pre-clamp value 9 > 1
        tape.backward(clamped)
        assert np.array_equal(h.grad, np.zeros((2, 1)))

    def test_clamp_passes_gradient_inside_range(self):
        lap = laplacian(build_graph(2, [(0, 1)]), LaplacianKind.UNNORMALIZED)
        h = Tensor([[0.5], [0.0]], requires_grad=True)
        tape = Tape()
        clamped = tape.clamp(tape.trace_quad(h, lap), 0.0, 1.0)
        tape.backward(clamped)
        assert np.allclose(h.grad, 2 * lap @ h.value)

    def test_backward_requires_scalar(self):
        tape = Tape()
        a = Tensor(np.zeros((2, 2)), requires_grad=True)
        out = tape.relu(a)
        with pytest.raises(ShapeMismatchError):
            tape.backward(out)

    def test_non_finite_loss_rejected(self):
        tape = Tape()
        a = Tensor(np.inf, requires_grad=False)
        with pytest.raises(NonFiniteLossError):
            tape.backward(tape.scale(Tensor(np.array(np.inf)), 1.0))


class TestShapeErrors:
    def test_matmul_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            Tape().matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))

    def test_add_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            Tape().add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((3, 2))))

    def test_empty_mask(self):
        tape = Tape()
        logp = tape.log_softmax_rows(Tensor(np.zeros((3, 2))))
        with pytest.raises(EmptyMaskError):
            tape.nll_loss(logp, np.zeros(3, dtype=int), np.zeros(3, dtype=bool))

    def test_trace_quad_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            Tape().trace_quad(Tensor(np.zeros((3, 1))), np.eye(2))


class TestGradCheck:
    def test_quadratic_is_exact(self):
        theta = Tensor(np.linspace(-1, 1, 12).reshape(4, 3), requires_grad=True)
        err = grad_check(lambda tape, t: tape.trace_quad(t, np.eye(4)), theta, eps=1e-5, rng=0)
        assert err < 1e-8

    def test_each_primitive_composite(self):
        rng = np.random.default_rng(3)
        n, d, c = 6, 4, 3
        labels = rng.integers(0, c, size=n)
        mask = np.ones(n, dtype=bool)
        w2 = rng.standard_normal((d, c))
        lap = laplacian(build_graph(n, [(i, (i + 1) % n) for i in range(n)]), LaplacianKind.SYM_NORMALIZED)

        def composite(tape, t):
            h = tape.relu(tape.matmul(t, Tensor(w2)))
            logp = tape.log_softmax_rows(h)
            ce = tape.nll_loss(logp, labels, mask)
            reg = tape.clamp(tape.trace_quad(h, lap), 0.0, 50.0)
            mse = tape.mse_loss(h, np.zeros((n, c)))
            bias = tape.add_bias(h, Tensor(np.arange(c, dtype=float), requires_grad=False))
            extra = tape.scale(tape.mse_loss(bias, np.ones((n, c))), 0.3)
            return tape.add(tape.add(ce, tape.scale(reg, 0.5)), tape.add(tape.scale(mse, 2.0), extra))

        theta = Tensor(rng.standard_normal((n, d)), requires_grad=True)
        err = grad_check(composite, theta, eps=1e-5, rng=1)
        assert err < 1e-4

    def test_bias_gradient(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((5, 3))

        def f(tape, b):
            out = tape.add_bias(Tensor(x), b)
            return tape.mse_loss(out, np.zeros((5, 3)))

        bias = Tensor(rng.standard_normal(3), requires_grad=True)
        assert grad_check(f, bias, eps=1e-5, rng=2) < 1e-6

    def test_eps_validated(self):
        theta = Tensor(np.ones((2, 2)), requires_grad=True)
        with pytest.raises(ValueError):
            grad_check(lambda tape, t: tape.trace_quad(t, np.eye(2)), theta, eps=1.0)
