"""Dense float64 arrays plus the computation tape used for backpropagation.

A ``Tensor`` wraps a C-contiguous float64 ndarray. Primitive operations (see
``ops``) append nodes to the active ``Tape`` in execution order, which is by
construction a topological order; ``Tape.backward`` replays the nodes once in
reverse and accumulates gradients functionally (no state is left on the
tensors themselves, so parameters can be reused across many tapes).

Arrays are validated as finite at public construction time. Ops trust their
inputs; training loops check losses explicitly.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

_TAPE_STACK: list["Tape"] = []


def active_tape() -> Optional["Tape"]:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tensor:
    """Immutable-by-convention dense array node in a computation graph."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"tensor rejected: non-finite entries (shape {arr.shape})")
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool) -> "Tensor":
        # Internal fast path for op outputs: skips the finiteness scan.
        out = cls.__new__(cls)
        out.data = arr
        out.requires_grad = requires_grad
        out.name = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() on non-scalar tensor of shape {self.data.shape}")
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag}, requires_grad={self.requires_grad})"

    # Thin operator sugar; the real rules live in ops.py.
    def __add__(self, other):
        from crashsynth.grad import ops

        return ops.add(self, other)

    def __mul__(self, other):
        from crashsynth.grad import ops

        return ops.mul(self, other)

    def __matmul__(self, other):
        from crashsynth.grad import ops

        return ops.matmul(self, other)

    def __sub__(self, other):
        from crashsynth.grad import ops

        return ops.sub(self, other)


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """Ordered record of primitive operations plus a parameter registry.

    Used as a context manager around the forward pass:

        with Tape() as tape:
            loss = model_loss(...)
        grads = tape.backward(loss, params)
    """

    __slots__ = ("_nodes", "params")

    def __init__(self):
        self._nodes: list[tuple[Tensor, tuple[Tensor, ...], BackwardFn]] = []
        self.params: dict[str, Tensor] = {}

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        popped = _TAPE_STACK.pop()
        assert popped is self, "tape stack corrupted"

    def __len__(self) -> int:
        return len(self._nodes)

    def watch(self, params: Mapping[str, Tensor]) -> None:
        """Register named parameters so backward() can report zero gradients
        for any that end up unreachable from the loss."""
        for name, p in params.items():
            self.params[name] = p

    def record(self, out: Tensor, inputs: Iterable[Tensor], backward: BackwardFn) -> None:
        self._nodes.append((out, tuple(inputs), backward))

    def backward(
        self, loss: Tensor, params: Mapping[str, Tensor] | None = None
    ) -> dict[str, np.ndarray]:
        """Accumulate d(loss)/d(param) for every registered parameter.

        The node list is replayed exactly once in reverse order. Parameters
        not reachable from the loss get zero gradients of matching shape.
        """
        if loss.data.size != 1:
            raise ValueError(f"backward: loss must be scalar, got shape {loss.data.shape}")
        if params is None:
            params = self.params
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for out, inputs, backward_fn in reversed(self._nodes):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for inp, gin in zip(inputs, backward_fn(g)):
                if gin is None or not inp.requires_grad:
                    continue
                acc = grads.get(id(inp))
                grads[id(inp)] = gin if acc is None else acc + gin
        return {
            name: grads.get(id(p), np.zeros_like(p.data)) for name, p in params.items()
        }
