"""Dense float64 tensors and the reverse-mode differentiation tape."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.my_util.errors import NumericalError, UsageError

BackwardFn = Callable[[np.ndarray], tuple[np.ndarray | None, ...]]

_active_tapes: list["Tape"] = []


class Tensor:
    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.grad: np.ndarray | None = None
        self.tape_id: int | None = None
        self._tape: Tape | None = None

    @classmethod
    def _wrap(cls, data: np.ndarray) -> "Tensor":
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.requires_grad = False
        out.name = None
        out.grad = None
        out.tape_id = None
        out._tape = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def tracked_by(self, tape: "Tape") -> bool:
        return self.requires_grad or self._tape is tape

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        extra = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{extra})"

    # operator sugar; the ops themselves live in src.tensor_core.ops
    def __add__(self, other):
        from src.tensor_core import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from src.tensor_core import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from src.tensor_core import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from src.tensor_core import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from src.tensor_core import ops

        return ops.neg(self)

    def __matmul__(self, other):
        from src.tensor_core import ops

        return ops.matmul(self, other)

    def sum(self):
        from src.tensor_core import ops

        return ops.sum(self)

    def mean(self):
        from src.tensor_core import ops

        return ops.mean(self)

    def reshape(self, *shape):
        from src.tensor_core import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    @property
    def T(self):
        from src.tensor_core import ops

        return ops.transpose(self)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class TapeNode:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Records ops in execution order, which is already a topological order.

    Single owner: build it inside one training step and consume it with `backward`.
    """

    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __enter__(self):
        _active_tapes.append(self)
        return self

    def __exit__(self, *exc):
        _active_tapes.remove(self)
        return False

    def record(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, backward: BackwardFn) -> int:
        output.tape_id = len(self.nodes)
        output._tape = self
        self.nodes.append(TapeNode(op, inputs, output, backward))
        return output.tape_id

    def backward(self, loss: Tensor) -> None:
        if loss._tape is not self or loss.tape_id is None:
            raise UsageError("loss was not produced under this tape")
        if loss.size != 1:
            raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")

        for node in self.nodes:
            node.output.grad = None
        loss.grad = np.ones_like(loss.data)

        for node in reversed(self.nodes[: loss.tape_id + 1]):
            out_grad = node.output.grad
            if out_grad is None:
                continue
            for tensor, grad in zip(node.inputs, node.backward(out_grad)):
                if grad is None or not tensor.tracked_by(self):
                    continue
                grad = np.broadcast_to(grad, tensor.shape)
                tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad


def active_tape() -> Tape | None:
    return _active_tapes[-1] if _active_tapes else None


def backward(tape: Tape, loss: Tensor) -> None:
    tape.backward(loss)


def make_result(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    """Wrap a forward result and put it on the active tape if any input is tracked."""
    if not np.all(np.isfinite(data)):
        raise NumericalError(f"{op} produced non-finite values")
    out = Tensor._wrap(data)
    tape = active_tape()
    if tape is not None and any(t.tracked_by(tape) for t in inputs):
        tape.record(op, inputs, out, backward_fn)
    return out
