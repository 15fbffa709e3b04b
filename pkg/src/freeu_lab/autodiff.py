"""Dense float32 tensor ops with reverse-mode automatic differentiation.

Values are C-contiguous float32 numpy arrays; a Node wraps a value together
with the record of the operation that produced it.  Gradients are populated
by backward() in reverse topological order.  Every published op verifies
that its output is finite and raises NumericError otherwise.

conv2d runs through an im2col GEMM; its input gradient is computed as a
transposed convolution (dilate-then-correlate), so both directions share the
same fast path.  The naive direct convolution lives in the tests as the
independent oracle.
"""

import threading
from contextlib import contextmanager

import numpy as np

from .errors import NumericError, ShapeError

# Per-thread so concurrent inference (service worker threads) can't clobber
# another thread's graph-construction mode.
_grad_state = threading.local()


def _grad_on():
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad():
    """Disable graph construction inside the block (inference fast path)."""
    prev = _grad_on()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = prev


def as_tensor(x):
    """Coerce to the canonical tensor layout: C-contiguous float32.

    (np.asarray with order="C" keeps 0-d scalars 0-d, unlike
    np.ascontiguousarray which would promote them to 1-d.)
    """
    return np.asarray(x, dtype=np.float32, order="C")


def _check_finite(arr, opname):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{opname} produced non-finite values")
    return arr


class Node:
    """A tensor value plus the bookkeeping needed for backpropagation."""

    __slots__ = ("value", "_grad", "parents", "_backward", "requires_grad", "name")

    def __init__(self, value, parents=(), backward=None, requires_grad=False, name=None):
        self.value = as_tensor(value)
        self._grad = None
        self.parents = tuple(parents)
        self._backward = backward
        self.requires_grad = requires_grad
        self.name = name

    @property
    def grad(self):
        if self._grad is None:
            self._grad = np.zeros_like(self.value)
        return self._grad

    @grad.setter
    def grad(self, g):
        self._grad = g

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self._grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Node(shape={self.value.shape}{tag})"


def constant(x, name=None):
    return Node(x, name=name)


def parameter(x, name=None):
    return Node(x, requires_grad=True, name=name)


def _make(value, parents, backward, opname):
    _check_finite(value, opname)
    if not _grad_on():
        return Node(value)
    return Node(value, parents=parents, backward=backward)


def _accumulate(node, g):
    if node._grad is None:
        node._grad = np.array(g, dtype=np.float32, copy=True)
    else:
        node._grad += g


def backward(loss):
    """Populate grads of every node reachable from the scalar loss."""
    if loss.value.size != 1:
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.value.shape}")
    topo = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in visited:
                stack.append((p, False))
    loss._grad = np.ones_like(loss.value)
    for node in reversed(topo):
        if node._backward is None or node._grad is None:
            continue
        grads = node._backward(node._grad)
        for parent, g in zip(node.parents, grads):
            if g is not None:
                _accumulate(parent, g)


# ---------------------------------------------------------------------------
# elementwise ops


def _unbroadcast(grad, shape):
    """Reduce grad back to `shape` after numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape).astype(np.float32, copy=False)


def _check_broadcast(a, b, opname):
    try:
        np.broadcast_shapes(a.value.shape, b.value.shape)
    except ValueError:
        raise ShapeError(
            f"{opname}: shapes {a.value.shape} and {b.value.shape} are not broadcastable"
        ) from None


def add(a, b):
    _check_broadcast(a, b, "add")
    out = a.value + b.value

    def bwd(g):
        return (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape))

    return _make(out, (a, b), bwd, "add")


def mul(a, b):
    _check_broadcast(a, b, "mul")
    out = a.value * b.value

    def bwd(g):
        return (
            _unbroadcast(g * b.value, a.value.shape),
            _unbroadcast(g * a.value, b.value.shape),
        )

    return _make(out, (a, b), bwd, "mul")


def scale(a, c):
    c = float(c)
    out = a.value * np.float32(c)

    def bwd(g):
        return (g * np.float32(c),)

    return _make(out, (a,), bwd, "scale")


def silu(a):
    sig = 1.0 / (1.0 + np.exp(-a.value.astype(np.float32)))
    out = a.value * sig

    def bwd(g):
        return (g * (sig * (1.0 + a.value * (1.0 - sig))),)

    return _make(out, (a,), bwd, "silu")


def elementwise(op_kind, a, b=None):
    """Dispatcher over the elementwise family: add, mul, silu, scale_by_constant."""
    if op_kind == "add":
        return add(a, b)
    if op_kind == "mul":
        return mul(a, b)
    if op_kind == "silu":
        return silu(a)
    if op_kind == "scale_by_constant":
        return scale(a, b)
    raise ValueError(f"unknown elementwise op kind {op_kind!r}")


def sub(a, b):
    return add(a, scale(b, -1.0))


def reshape(a, shape):
    shape = tuple(shape)
    out = a.value.reshape(shape)

    def bwd(g):
        return (g.reshape(a.value.shape),)

    return _make(out, (a,), bwd, "reshape")


def sum_all(a):
    out = np.array(a.value.sum(dtype=np.float64), dtype=np.float32).reshape(())

    def bwd(g):
        return (np.full_like(a.value, np.float32(g)),)

    return _make(out, (a,), bwd, "sum_all")


def mean_all(a):
    n = a.value.size
    out = np.array(a.value.sum(dtype=np.float64) / n, dtype=np.float32).reshape(())

    def bwd(g):
        return (np.full_like(a.value, np.float32(g / n)),)

    return _make(out, (a,), bwd, "mean_all")


# ---------------------------------------------------------------------------
# conv2d


def _pad_hw(x, padding):
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _im2col(xp, k, stride, ho, wo):
    """Receptive-field matrix (N, C*k*k, Ho*Wo); copy order keeps the inner
    loop contiguous, which dominates conv throughput here."""
    n, c = xp.shape[:2]
    s0, s1, s2, s3 = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, c, k, k, ho, wo),
        strides=(s0, s1, s2, s3, s2 * stride, s3 * stride),
        writeable=False,
    )
    return np.ascontiguousarray(view).reshape(n, c * k * k, ho * wo)


def _corr_value(x, w, stride, padding):
    """Raw cross-correlation on float32 arrays; shared by forward and backward."""
    n, c_in, h, wdt = x.shape
    c_out, _, k, _ = w.shape
    ho = (h + 2 * padding - k) // stride + 1
    wo = (wdt + 2 * padding - k) // stride + 1
    xp = _pad_hw(x, padding)
    cols = _im2col(xp, k, stride, ho, wo)
    out = np.matmul(w.reshape(c_out, -1), cols)
    return out.reshape(n, c_out, ho, wo), cols


def conv2d(x, w, b=None, stride=1, padding=0):
    """Cross-correlation of NCHW input with OIkk weights, plus optional bias."""
    if x.value.ndim != 4 or w.value.ndim != 4:
        raise ShapeError(
            f"conv2d expects 4-d input and weight, got {x.value.shape} and {w.value.shape}"
        )
    n, c_in, h, wdt = x.value.shape
    c_out, c_in_w, k, k2 = w.value.shape
    if k != k2 or k % 2 != 1:
        raise ShapeError(f"conv2d kernel must be square with odd size, got {w.value.shape}")
    if c_in != c_in_w:
        raise ShapeError(
            f"conv2d channel mismatch: input {x.value.shape} vs weight {w.value.shape}"
        )
    if (h + 2 * padding - k) % stride or (wdt + 2 * padding - k) % stride:
        raise ShapeError(
            f"conv2d geometry not integral: input {x.value.shape}, k={k}, "
            f"stride={stride}, padding={padding}"
        )
    if b is not None and b.value.shape != (c_out,):
        raise ShapeError(f"conv2d bias shape {b.value.shape} != ({c_out},)")
    if padding > k - 1:
        raise ShapeError(f"conv2d requires padding <= k-1, got padding={padding}, k={k}")

    out, _ = _corr_value(x.value, w.value, stride, padding)
    if b is not None:
        out = out + b.value.reshape(1, c_out, 1, 1)

    ho, wo = out.shape[2], out.shape[3]

    def bwd(g):
        g = np.ascontiguousarray(g, dtype=np.float32)
        g3 = g.reshape(n, c_out, ho * wo)
        # weight grad: recompute the im2col matrix (cheaper than caching it)
        cols = _im2col(_pad_hw(x.value, padding), k, stride, ho, wo)
        gw = np.matmul(g3, cols.transpose(0, 2, 1)).sum(axis=0).reshape(w.value.shape)
        gb = g.sum(axis=(0, 2, 3)) if b is not None else None
        # input grad: dilate by stride, correlate with the rotated weight
        if stride > 1:
            gd = np.zeros((n, c_out, (ho - 1) * stride + 1, (wo - 1) * stride + 1), np.float32)
            gd[:, :, ::stride, ::stride] = g
        else:
            gd = g
        w_rot = np.ascontiguousarray(w.value[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
        gx, _ = _corr_value(gd, w_rot, 1, k - 1 - padding)
        grads = (gx, gw)
        if b is not None:
            grads = grads + (gb,)
        return grads

    parents = (x, w) if b is None else (x, w, b)
    return _make(out, parents, bwd, "conv2d")


def linear(x, w, b=None):
    """x[N,Din] @ w[Din,Dout] (+ b[Dout])."""
    if x.value.ndim != 2 or w.value.ndim != 2 or x.value.shape[1] != w.value.shape[0]:
        raise ShapeError(f"linear shape mismatch: {x.value.shape} @ {w.value.shape}")
    out = x.value @ w.value
    if b is not None:
        out = out + b.value

    def bwd(g):
        g = np.ascontiguousarray(g, dtype=np.float32)
        grads = (g @ w.value.T, x.value.T @ g)
        if b is not None:
            grads = grads + (g.sum(axis=0),)
        return grads

    parents = (x, w) if b is None else (x, w, b)
    return _make(out, parents, bwd, "linear")


# ---------------------------------------------------------------------------
# normalization / resampling / concat


def group_norm(x, groups, gamma, beta, eps=1e-5):
    """Per-group standardization over (channels-in-group, H, W), then affine."""
    n, c, h, w = x.value.shape
    if c % groups:
        raise ShapeError(f"group_norm: {c} channels not divisible by {groups} groups")
    if gamma.value.shape != (c,) or beta.value.shape != (c,):
        raise ShapeError("group_norm: gamma/beta must have shape (C,)")
    m = (c // groups) * h * w
    xg = x.value.reshape(n, groups, m)
    mu = xg.mean(axis=2, keepdims=True)
    var = xg.var(axis=2, keepdims=True)
    inv_std = (1.0 / np.sqrt(var + np.float32(eps))).astype(np.float32)
    xhat = ((xg - mu) * inv_std).reshape(n, c, h, w)
    out = xhat * gamma.value.reshape(1, c, 1, 1) + beta.value.reshape(1, c, 1, 1)

    def bwd(g):
        g = np.ascontiguousarray(g, dtype=np.float32)
        ggamma = (g * xhat).sum(axis=(0, 2, 3))
        gbeta = g.sum(axis=(0, 2, 3))
        dxhat = (g * gamma.value.reshape(1, c, 1, 1)).reshape(n, groups, m)
        xhat_g = xhat.reshape(n, groups, m)
        # standard fused group-norm input gradient
        s1 = dxhat.sum(axis=2, keepdims=True)
        s2 = (dxhat * xhat_g).sum(axis=2, keepdims=True)
        gx = (dxhat - s1 / m - xhat_g * s2 / m) * inv_std
        return (gx.reshape(n, c, h, w).astype(np.float32), ggamma, gbeta)

    return _make(out, (x, gamma, beta), bwd, "group_norm")


def resample(x, mode):
    """down2_avg: 2x2 mean pooling; up2_nearest: 2x replication."""
    n, c, h, w = x.value.shape
    if mode == "down2_avg":
        if h % 2 or w % 2:
            raise ShapeError(f"down2_avg requires even extents, got {x.value.shape}")
        out = x.value.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

        def bwd(g):
            gx = np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * np.float32(0.25)
            return (gx,)

    elif mode == "up2_nearest":
        out = np.repeat(np.repeat(x.value, 2, axis=2), 2, axis=3)

        def bwd(g):
            return (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)).astype(np.float32),)

    else:
        raise ValueError(f"unknown resample mode {mode!r}")
    return _make(out, (x,), bwd, "resample")


def concat_channels(a, b):
    """Concatenate along the channel axis; a occupies the leading channels."""
    if a.value.ndim != 4 or b.value.ndim != 4:
        raise ShapeError("concat_channels expects NCHW inputs")
    na, ca, ha, wa = a.value.shape
    nb, cb, hb, wb = b.value.shape
    if (na, ha, wa) != (nb, hb, wb):
        raise ShapeError(
            f"concat_channels spatial mismatch: {a.value.shape} vs {b.value.shape}"
        )
    out = np.concatenate([a.value, b.value], axis=1)

    def bwd(g):
        return (np.ascontiguousarray(g[:, :ca]), np.ascontiguousarray(g[:, ca:]))

    return _make(out, (a, b), bwd, "concat_channels")


# ---------------------------------------------------------------------------
# optimizer


class Adam:
    """Adam over a name->Node parameter map; state round-trips through float32
    tensors so checkpoint resume is bit-exact."""

    def __init__(self, params, lr=2e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.value) for k, p in sorted(self.params.items())}
        self.v = {k: np.zeros_like(p.value) for k, p in sorted(self.params.items())}

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        self.t += 1
        b1, b2 = np.float32(self.beta1), np.float32(self.beta2)
        c1 = np.float32(1.0 / (1.0 - self.beta1**self.t))
        c2 = np.float32(1.0 / (1.0 - self.beta2**self.t))
        lr, eps = np.float32(self.lr), np.float32(self.eps)
        for name in sorted(self.params):
            p = self.params[name]
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (np.float32(1) - b1) * g
            v *= b2
            v += (np.float32(1) - b2) * (g * g)
            p.value -= lr * (m * c1) / (np.sqrt(v * c2) + eps)

    def state_tensors(self):
        out = {}
        for name in sorted(self.params):
            out[f"opt.m.{name}"] = self.m[name]
            out[f"opt.v.{name}"] = self.v[name]
        return out

    def load_state_tensors(self, tensors, t):
        self.t = int(t)
        for name in sorted(self.params):
            self.m[name] = as_tensor(tensors[f"opt.m.{name}"]).reshape(self.m[name].shape)
            self.v[name] = as_tensor(tensors[f"opt.v.{name}"]).reshape(self.v[name].shape)
