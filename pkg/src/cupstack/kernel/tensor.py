"""Dense tensors with tape-style reverse-mode differentiation.

Every differentiable operation goes through ``ops.apply``, which records an
OpNode on the output tensor when gradients are required. ``backprop`` walks
the recorded graph once, accumulates gradients additively, and by default
frees the tape so a 400-step BPTT graph does not linger in memory.

Graphs are single-threaded; independent graphs may live on different threads
(the grad-enable flag is thread-local, and tensors share no global state).
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

import numpy as np

from ..errors import KernelError

_FLOAT_DTYPES = (np.float32, np.float64)

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad():
    """Disable tape recording inside the block (inference fast path)."""
    prev = grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = prev


class OpNode:
    """One recorded operation: opcode, input tensors, and a backward closure.

    The closure owns exactly the activations saved by the forward pass and
    maps the output gradient to one gradient array per input (None for
    inputs that do not need one).
    """

    __slots__ = ("opcode", "inputs", "backward")

    def __init__(self, opcode, inputs, backward):
        self.opcode = opcode
        self.inputs = inputs
        self.backward = backward


class Tensor:
    """N-dimensional float array with optional gradient tracking.

    data is always a contiguous float32 or float64 numpy array. grad, when
    populated by backprop, has the same shape and dtype as data.
    """

    __slots__ = ("data", "requires_grad", "grad", "node")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.node = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise KernelError(None, f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """Constant view of this tensor's values, cut off from the graph."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        flags = []
        if self.requires_grad:
            flags.append("grad")
        if self.node is not None:
            flags.append(self.node.opcode)
        tag = f" [{', '.join(flags)}]" if flags else ""
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.data.dtype.name}{tag})"


def _toposort(root: Tensor):
    """Tensors with nodes, inputs before outputs. Iterative: BPTT graphs
    are thousands of nodes deep and would blow the recursion limit."""
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        t, expanded = stack.pop()
        if expanded:
            order.append(t)
            continue
        if id(t) in seen or t.node is None:
            continue
        seen.add(id(t))
        stack.append((t, True))
        for inp in t.node.inputs:
            if inp.node is not None and id(inp) not in seen:
                stack.append((inp, False))
    return order


def backprop(loss: Tensor, free_graph: bool = True):
    """Fill .grad on every reachable requires_grad tensor.

    Gradients accumulate additively, both across multiple uses of a tensor
    within the graph and across repeated backprop calls (callers zero grads
    explicitly). With free_graph the tape is severed as it is consumed, which
    releases saved activations immediately; the graph cannot be replayed.
    """
    if loss.data.size != 1:
        raise KernelError(None, f"backprop requires a scalar loss, got shape {loss.shape}")
    if loss.node is None:
        raise KernelError(None, "backprop on a tensor with no recorded graph")

    order = _toposort(loss)
    seed = np.ones_like(loss.data)
    _accumulate(loss, seed)
    for out in reversed(order):
        node = out.node
        grads = node.backward(out.grad)
        for inp, g in zip(node.inputs, grads):
            if g is not None and inp.requires_grad:
                _accumulate(inp, g)
        if free_graph:
            out.node = None


def _accumulate(t: Tensor, g: np.ndarray):
    # Never += in place: backward rules may hand out views of other grads.
    if t.grad is None:
        t.grad = g
    else:
        t.grad = t.grad + g
