"""Small parameterized building blocks shared by the networks."""

from __future__ import annotations

import numpy as np

from crashsynth.grad import ops
from crashsynth.grad.tensor import Tensor


def glorot(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


class ParamBank:
    """Ordered registry of named trainable tensors."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(values, requires_grad=True, name=name)
        self._params[name] = t
        return t

    def as_dict(self) -> dict[str, Tensor]:
        return dict(self._params)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, t in self._params.items():
            arr = np.ascontiguousarray(arrays[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ValueError(
                    f"parameter {name!r}: stored shape {arr.shape} != expected {t.data.shape}"
                )
            t.data = arr


class Linear:
    def __init__(
        self,
        bank: ParamBank,
        name: str,
        n_in: int,
        n_out: int,
        rng: np.random.Generator | None = None,
        zero_init: bool = False,
    ):
        if zero_init:
            w = np.zeros((n_in, n_out))
        else:
            assert rng is not None
            w = glorot(rng, n_in, n_out)
        self.w = bank.add(f"{name}.w", w)
        self.b = bank.add(f"{name}.b", np.zeros(n_out))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.add(ops.matmul(x, self.w), self.b)


class MLP:
    """Feed-forward stack with tanh hidden activations and a linear head."""

    def __init__(
        self,
        bank: ParamBank,
        name: str,
        n_in: int,
        hidden: tuple[int, ...],
        n_out: int,
        rng: np.random.Generator,
    ):
        sizes = (n_in, *hidden, n_out)
        self.layers = [
            Linear(bank, f"{name}.l{i}", sizes[i], sizes[i + 1], rng)
            for i in range(len(sizes) - 1)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers[:-1]:
            x = ops.tanh(layer(x))
        return self.layers[-1](x)


class LSTMCell:
    """Single-layer LSTM cell; gate order i, f, g, o. Forget bias starts at 1."""

    def __init__(
        self, bank: ParamBank, name: str, n_in: int, n_hidden: int, rng: np.random.Generator
    ):
        self.n_hidden = n_hidden
        self.wx = bank.add(f"{name}.wx", glorot(rng, n_in, 4 * n_hidden))
        self.wh = bank.add(f"{name}.wh", glorot(rng, n_hidden, 4 * n_hidden))
        b = np.zeros(4 * n_hidden)
        b[n_hidden : 2 * n_hidden] = 1.0
        self.b = bank.add(f"{name}.b", b)

    def initial_state(self, batch: int) -> tuple[Tensor, Tensor]:
        zeros = np.zeros((batch, self.n_hidden))
        return Tensor(zeros), Tensor(zeros.copy())

    def step(self, x: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
        h_prev, c_prev = state
        z = ops.add(ops.add(ops.matmul(x, self.wx), ops.matmul(h_prev, self.wh)), self.b)
        nh = self.n_hidden
        i = ops.sigmoid(ops.slice_axis(z, -1, 0, nh))
        f = ops.sigmoid(ops.slice_axis(z, -1, nh, 2 * nh))
        g = ops.tanh(ops.slice_axis(z, -1, 2 * nh, 3 * nh))
        o = ops.sigmoid(ops.slice_axis(z, -1, 3 * nh, 4 * nh))
        c = ops.add(ops.mul(f, c_prev), ops.mul(i, g))
        h = ops.mul(o, ops.tanh(c))
        return h, c
