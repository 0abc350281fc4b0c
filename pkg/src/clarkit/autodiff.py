"""Minimal dense reverse-mode differentiation.

A Tape records matrix-valued primitive ops as they execute; backward walks
the records in exact reverse order and accumulates gradients, summing over
every use of a tensor. Everything is float64: gradient checks at 32-bit are
unreliable. One Tape belongs to one training session; independent tapes can
run concurrently.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "ShapeMismatchError",
    "EmptyMaskError",
    "NonFiniteLossError",
    "NonFiniteGradError",
    "Tensor",
    "Tape",
    "grad_check",
]


class ShapeMismatchError(ValueError):
    """Operand shapes are incompatible for the requested op."""


class EmptyMaskError(ValueError):
    """A row mask selected no rows."""


class NonFiniteLossError(FloatingPointError):
    """A loss evaluated to NaN or infinity."""


class NonFiniteGradError(FloatingPointError):
    """A gradient contained NaN or infinity."""


class Tensor:
    """Dense float64 value with an optional gradient accumulator."""

    __slots__ = ("value", "requires_grad", "grad", "_needs")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._needs = self.requires_grad  # gradient must flow to or through this tensor

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Ordered record of primitive ops; backward replays it in reverse."""

    def __init__(self):
        self._records: list[tuple[Tensor, tuple[Tensor, ...], object]] = []

    def _record(self, out: Tensor, inputs: tuple[Tensor, ...], backward) -> Tensor:
        out._needs = any(i._needs for i in inputs)
        if out._needs:
            self._records.append((out, inputs, backward))
        return out

    # -- primitives ---------------------------------------------------------

    def matmul(self, a, b) -> Tensor:
        a, b = as_tensor(a), as_tensor(b)
        if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
            raise ShapeMismatchError(f"matmul {a.value.shape} @ {b.value.shape}")
        out = Tensor(a.value @ b.value)

        def backward(g):
            ga = g @ b.value.T if a._needs else None
            gb = a.value.T @ g if b._needs else None
            return ga, gb

        return self._record(out, (a, b), backward)

    def add(self, a, b) -> Tensor:
        a, b = as_tensor(a), as_tensor(b)
        if a.value.shape != b.value.shape:
            raise ShapeMismatchError(f"add {a.value.shape} + {b.value.shape}")
        out = Tensor(a.value + b.value)

        def backward(g):
            return g, g

        return self._record(out, (a, b), backward)

    def add_bias(self, a, bias) -> Tensor:
        """Add a row vector to every row (the only broadcasting we support)."""
        a, bias = as_tensor(a), as_tensor(bias)
        if a.value.ndim != 2 or bias.value.shape != (a.value.shape[1],):
            raise ShapeMismatchError(f"add_bias {a.value.shape} + {bias.value.shape}")
        out = Tensor(a.value + bias.value[None, :])

        def backward(g):
            return g, g.sum(axis=0)

        return self._record(out, (a, bias), backward)

    def relu(self, a) -> Tensor:
        a = as_tensor(a)
        mask = a.value > 0
        out = Tensor(np.where(mask, a.value, 0.0))

        def backward(g):
            return (g * mask,)

        return self._record(out, (a,), backward)

    def scale(self, a, c: float) -> Tensor:
        a = as_tensor(a)
        c = float(c)
        out = Tensor(a.value * c)

        def backward(g):
            return (g * c,)

        return self._record(out, (a,), backward)

    def log_softmax_rows(self, a) -> Tensor:
        a = as_tensor(a)
        if a.value.ndim != 2:
            raise ShapeMismatchError(f"log_softmax_rows needs a matrix, got {a.value.shape}")
        shifted = a.value - a.value.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        out = Tensor(shifted - logz)

        def backward(g):
            softmax = np.exp(out.value)
            return (g - softmax * g.sum(axis=1, keepdims=True),)

        return self._record(out, (a,), backward)

    def nll_loss(self, logp, labels, mask) -> Tensor:
        """Mean negative log-likelihood over the rows selected by ``mask``."""
        logp = as_tensor(logp)
        labels = np.asarray(labels, dtype=np.int64)
        mask = np.asarray(mask, dtype=bool)
        if logp.value.ndim != 2 or labels.shape != (logp.value.shape[0],) or mask.shape != labels.shape:
            raise ShapeMismatchError(
                f"nll_loss logp {logp.value.shape}, labels {labels.shape}, mask {mask.shape}"
            )
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            raise EmptyMaskError("nll_loss mask selects no rows")
        out = Tensor(-logp.value[rows, labels[rows]].mean())

        def backward(g):
            d = np.zeros_like(logp.value)
            d[rows, labels[rows]] = -float(g) / rows.size
            return (d,)

        return self._record(out, (logp,), backward)

    def mse_loss(self, pred, target) -> Tensor:
        """Mean squared error against a constant target, over all entries."""
        pred = as_tensor(pred)
        target = np.asarray(target, dtype=np.float64)
        if pred.value.shape != target.shape:
            raise ShapeMismatchError(f"mse_loss {pred.value.shape} vs {target.shape}")
        diff = pred.value - target
        out = Tensor((diff**2).mean())

        def backward(g):
            return (float(g) * 2.0 * diff / diff.size,)

        return self._record(out, (pred,), backward)

    def trace_quad(self, h, m: np.ndarray) -> Tensor:
        """tr(h^T M h) for a constant matrix M; gradient is (M + M^T) h."""
        h = as_tensor(h)
        m = np.asarray(m, dtype=np.float64)
        if h.value.ndim != 2 or m.shape != (h.value.shape[0], h.value.shape[0]):
            raise ShapeMismatchError(f"trace_quad h {h.value.shape}, m {m.shape}")
        out = Tensor((h.value * (m @ h.value)).sum())

        def backward(g):
            return (float(g) * ((m + m.T) @ h.value),)

        return self._record(out, (h,), backward)

    def edge_diff_quad(self, h, us: np.ndarray, vs: np.ndarray, su: np.ndarray, sv: np.ndarray) -> Tensor:
        """sum_e ||su_e * h[us_e] - sv_e * h[vs_e]||^2 over paired index arrays.

        Sparse form of a Laplacian trace quadratic: per-endpoint scales carry
        the degree normalization. Gradient scatters 2*diff back onto the rows.
        """
        h = as_tensor(h)
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        su = np.asarray(su, dtype=np.float64)
        sv = np.asarray(sv, dtype=np.float64)
        if h.value.ndim != 2 or not (us.shape == vs.shape == su.shape == sv.shape):
            raise ShapeMismatchError("edge_diff_quad needs a matrix and aligned edge arrays")
        diff = h.value[us] * su[:, None] - h.value[vs] * sv[:, None]
        out = Tensor((diff**2).sum())

        def backward(g):
            grad = np.zeros_like(h.value)
            scaled = 2.0 * float(g) * diff
            np.add.at(grad, us, scaled * su[:, None])
            np.add.at(grad, vs, -scaled * sv[:, None])
            return (grad,)

        return self._record(out, (h,), backward)

    def clamp(self, a, lo: float, hi: float) -> Tensor:
        """Clamp a scalar; the gradient is zero wherever the value is clipped."""
        a = as_tensor(a)
        if a.value.ndim != 0:
            raise ShapeMismatchError(f"clamp expects a scalar, got shape {a.value.shape}")
        v = float(a.value)
        out = Tensor(min(max(v, lo), hi))
        passthrough = lo <= v <= hi

        def backward(g):
            return (g if passthrough else np.zeros_like(g),)

        return self._record(out, (a,), backward)

    # -- reverse pass -------------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into ``.grad`` of every grad-requiring leaf."""
        if loss.value.ndim != 0:
            raise ShapeMismatchError("backward needs a scalar loss")
        if not math.isfinite(float(loss.value)):
            raise NonFiniteLossError("loss is not finite")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
        for out, inputs, backward in reversed(self._records):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for inp, ig in zip(inputs, backward(g)):
                if ig is None or not inp._needs:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + ig
                else:
                    grads[key] = ig
                if inp.requires_grad:
                    inp.grad = grads[key]


def grad_check(f, theta: Tensor, eps: float = 1e-5, num_coords: int = 50, rng=None) -> float:
    """Compare analytic gradients of ``f`` against central differences.

    ``f(tape, theta)`` must build and return a scalar loss. Central
    differences are evaluated on a random subset of at least ``num_coords``
    coordinates (all of them for small tensors); returns the max relative
    error, with the denominator floored at 1.
    """
    if not (1e-6 <= eps <= 1e-3):
        raise ValueError(f"eps must lie in [1e-6, 1e-3], got {eps}")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng

    tape = Tape()
    loss = f(tape, theta)
    if not math.isfinite(float(loss.value)):
        raise NonFiniteLossError("loss is not finite")
    theta.grad = None
    tape.backward(loss)
    analytic = np.zeros_like(theta.value) if theta.grad is None else theta.grad.copy()

    flat = theta.value.reshape(-1)
    size = flat.size
    if size <= num_coords:
        coords = np.arange(size)
    else:
        coords = rng.choice(size, size=num_coords, replace=False)

    worst = 0.0
    for idx in coords:
        orig = flat[idx]
        flat[idx] = orig + eps
        up = float(f(Tape(), theta).value)
        flat[idx] = orig - eps
        down = float(f(Tape(), theta).value)
        flat[idx] = orig
        numeric = (up - down) / (2.0 * eps)
        a = float(analytic.reshape(-1)[idx])
        err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
        worst = max(worst, err)
    return worst
