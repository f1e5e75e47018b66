"""Dense tensors with reverse-mode automatic differentiation.

The graph is taped implicitly: every tracked op attaches its parents and a
vector-Jacobian-product closure to the output tensor. ``backward`` walks the
graph once per call with fresh per-pass buffers, so leaf gradients accumulate
additively across calls while intermediates never keep stale state.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import NumericError, ShapeError

DEFAULT_DTYPE = np.float64
_FLOAT_DTYPES = (np.float32, np.float64)

# Module-level switches. Finite checks catch NaN/Inf at op boundaries;
# grad mode can be suspended for evaluation-only forwards.
_finite_checks = True
_grad_enabled = True


def set_finite_checks(enabled: bool) -> bool:
    """Toggle NaN/Inf detection on op outputs; returns the previous setting."""
    global _finite_checks
    previous = _finite_checks
    _finite_checks = bool(enabled)
    return previous


@contextlib.contextmanager
def no_grad():
    """Context manager suspending graph construction (inference mode)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def grad_enabled() -> bool:
    return _grad_enabled


def _check_finite(arr: np.ndarray, op_name: str) -> None:
    if _finite_checks and not np.all(np.isfinite(arr)):
        raise NumericError(f"{op_name} produced non-finite values")


class Tensor:
    """Dense N-d array with optional gradient tracking.

    ``data`` is a row-major float buffer (float64 by default, float32
    selectable). ``grad`` stays ``None`` until a backward pass reaches this
    tensor; it always matches ``data``'s shape once allocated. Only leaf
    tensors created with ``requires_grad=True`` receive gradients.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if dtype is None:
            arr = np.asarray(data)
            if arr.dtype not in _FLOAT_DTYPES:
                arr = arr.astype(DEFAULT_DTYPE)
        else:
            arr = np.asarray(data, dtype=dtype)
            if arr.dtype not in _FLOAT_DTYPES:
                raise ShapeError(f"unsupported dtype {arr.dtype}")
        self.data: np.ndarray = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._vjp: Optional[Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def is_leaf(self) -> bool:
        return self._vjp is None

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{flag})"


def make_op(
    out_data: np.ndarray,
    parents: Sequence[Tensor],
    vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
    op_name: str,
) -> Tensor:
    """Wrap an op result, attaching the graph edge when tracking is on.

    ``vjp`` maps the upstream gradient to per-parent contributions aligned
    with ``parents`` (``None`` for non-differentiable arguments). It must
    return freshly allocated arrays or arrays it does not mutate later.
    """
    _check_finite(out_data, op_name)
    out = Tensor(out_data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _topo_order(root: Tensor) -> list[Tensor]:
    # Iterative post-order DFS; recursion would overflow on long chains.
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every reachable requires-grad leaf.

    Gradients accumulate additively: a second call adds another full
    gradient on top. Tensors outside the graph keep ``grad is None``.
    """
    if loss.data.shape != ():
        raise ShapeError(f"backward requires a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order = _topo_order(loss)
    # Per-pass gradient buffers keyed by node identity; leaves flush into
    # their persistent .grad at the end so repeated passes stack cleanly.
    pass_grads: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=loss.data.dtype)}
    for node in reversed(order):
        g = pass_grads.pop(id(node), None)
        if g is None:
            continue
        if node._vjp is None:
            if node.requires_grad:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad += g
            continue
        for parent, contribution in zip(node._parents, node._vjp(g)):
            if contribution is None or not parent.requires_grad:
                continue
            held = pass_grads.get(id(parent))
            pass_grads[id(parent)] = contribution if held is None else held + contribution


def as_tensor(value, dtype=None) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value, dtype=dtype)
