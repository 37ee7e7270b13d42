import numpy as np

from src.my_util.errors import UsageError
from src.tensor_core.tensor import Tensor


def sgd_step(params: list[Tensor], lr: float) -> None:
    """p <- p - lr * grad(p), then zero the gradients. No momentum."""
    if lr < 0:
        raise UsageError(f"learning rate must be non-negative, got {lr}")
    missing = [p.name or str(i) for i, p in enumerate(params) if p.grad is None]
    if missing:
        raise UsageError(f"sgd_step: no gradient for parameter(s) {', '.join(missing)}; run backward first")
    for p in params:
        p.data -= lr * p.grad
        p.grad = np.zeros_like(p.data)
