"""Second-order jets and a reverse-mode tape.

A :class:`Jet2` carries a value, its first derivatives with respect to every
network input and the diagonal of the input Hessian. The three channels may
hold Python floats, numpy arrays (one entry per evaluation point) or
:class:`Var` nodes recorded on a :class:`Tape`. In the last case the
parameter gradient of any scalar built from the jets is obtained by a single
reverse sweep (reverse-over-forward), see :func:`param_gradient`.

Mixed partials are never formed: the Burgers residuals only need u_x, u_t,
u_xx and u_yy, and the diagonal second derivatives close under the chain and
Leibniz rules on their own.
"""

from __future__ import annotations

import numba
import numpy as np

__all__ = [
    "Jet2",
    "Tape",
    "TapeError",
    "Var",
    "cos",
    "exp",
    "jet_arith",
    "jet_const",
    "jet_dense",
    "jet_tanh",
    "jet_var",
    "param_gradient",
    "sin",
    "tanh",
]


class TapeError(RuntimeError):
    """Raised when a tape is used before it records a scalar loss."""


def _unbroadcast(grad, shape):
    # sum out axes that numpy broadcasting added or stretched
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tape:
    """Append-only record of array operations leading to a scalar loss.

    Nodes are appended in creation order, which is a valid topological order
    for the reverse sweep.
    """

    def __init__(self):
        self.nodes: list[Var] = []
        self.params: list[Var] = []
        self.output: Var | None = None
        # owner object id -> leaves already registered for it
        self.bindings: dict[int, list] = {}

    def param(self, array) -> "Var":
        """Register ``array`` as a differentiable leaf."""
        node = Var(np.array(array, dtype=np.float64), self)
        self.params.append(node)
        return node

    def finalize(self, out: "Var") -> "Var":
        if not isinstance(out, Var) or out.tape is not self:
            raise TapeError("loss must be a node recorded on this tape")
        if np.size(out.value) != 1:
            raise TapeError(f"loss must be scalar, got shape {np.shape(out.value)}")
        self.output = out
        return out

    @property
    def n_params(self) -> int:
        return sum(p.value.size for p in self.params)

    def release(self):
        """Drop every recorded node.

        Nodes point back at their tape, so a tape and its nodes form a
        reference cycle that only the cyclic collector would reclaim. Call
        this once the gradient has been taken to free the activations now.
        """
        self.nodes.clear()
        self.params.clear()
        self.bindings.clear()
        self.output = None


class Var:
    """Array-valued node on a :class:`Tape`."""

    # make ndarray (op) Var defer to the reflected Var methods
    __array_ufunc__ = None

    def __init__(self, value, tape: Tape, parents=(), vjp=None):
        self.value = value
        self.tape = tape
        self.parents = parents
        self.vjp = vjp
        self.index = len(tape.nodes)
        tape.nodes.append(self)

    def __repr__(self):
        return f"Var(shape={np.shape(self.value)}, index={self.index})"

    @property
    def shape(self):
        return np.shape(self.value)

    def _new(self, value, parents, vjp):
        return Var(value, self.tape, parents, vjp)

    def __add__(self, other):
        if isinstance(other, Var):
            return self._new(self.value + other.value, (self, other), lambda g: (g, g))
        return self._new(self.value + other, (self,), lambda g: (g,))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Var):
            return self._new(self.value - other.value, (self, other), lambda g: (g, -g))
        return self._new(self.value - other, (self,), lambda g: (g,))

    def __rsub__(self, other):
        return self._new(other - self.value, (self,), lambda g: (-g,))

    def __neg__(self):
        return self._new(-self.value, (self,), lambda g: (-g,))

    def __mul__(self, other):
        a = self.value
        if isinstance(other, Var):
            b = other.value
            return self._new(a * b, (self, other), lambda g: (g * b, g * a))
        return self._new(a * other, (self,), lambda g: (g * other,))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            a, b = self.value, other.value
            return self._new(a / b, (self, other), lambda g: (g / b, -g * a / (b * b)))
        return self._new(self.value / other, (self,), lambda g: (g / other,))

    def __matmul__(self, other):
        a = self.value
        if isinstance(other, Var):
            b = other.value
            return self._new(a @ b, (self, other), lambda g: (_mm_left(g, b), _mm_right(a, g)))
        return self._new(a @ other, (self,), lambda g: (_mm_left(g, other),))

    def __rmatmul__(self, other):
        b = self.value
        return self._new(other @ b, (self,), lambda g: (_mm_right(other, g),))

    def __getitem__(self, key):
        shape = self.value.shape

        def vjp(g):
            out = np.zeros(shape)
            out[key] = g
            return (out,)

        return self._new(self.value[key], (self,), vjp)

    def tanh(self):
        y = np.tanh(self.value)
        return self._new(y, (self,), lambda g: (g * (1.0 - y * y),))

    def exp(self):
        y = np.exp(self.value)
        return self._new(y, (self,), lambda g: (g * y,))

    def sin(self):
        x = self.value
        return self._new(np.sin(x), (self,), lambda g: (g * np.cos(x),))

    def cos(self):
        x = self.value
        return self._new(np.cos(x), (self,), lambda g: (-g * np.sin(x),))

    def sum(self):
        shape = self.value.shape
        return self._new(np.sum(self.value), (self,), lambda g: (np.broadcast_to(g, shape),))


def _mm_left(g, b):
    # d(a @ b)/da contracted with g
    if b.ndim == 1:
        return np.multiply.outer(g, b)
    return g @ b.T


def _mm_right(a, g):
    if a.ndim == 1:
        return np.multiply.outer(a, g)
    return a.T @ g


def param_gradient(tape: Tape) -> np.ndarray:
    """Exact gradient of the finalized loss w.r.t. every registered parameter.

    The result is flattened in parameter registration order. The tape is
    left untouched, so repeated calls return bit-identical vectors.
    """
    out = tape.output
    if out is None:
        raise TapeError("tape has no scalar output; call Tape.finalize first")
    grads: list = [None] * (out.index + 1)
    grads[out.index] = np.ones_like(out.value, dtype=np.float64)
    for node in reversed(tape.nodes[: out.index + 1]):
        g = grads[node.index]
        if g is None or node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            pg = _unbroadcast(np.asarray(pg), np.shape(parent.value))
            prev = grads[parent.index]
            grads[parent.index] = pg if prev is None else prev + pg
    flat = []
    for p in tape.params:
        g = grads[p.index] if p.index < len(grads) else None
        flat.append(np.zeros(p.value.size) if g is None else np.ravel(g))
    if not flat:
        return np.zeros(0)
    return np.concatenate(flat)


def _lift(f):
    # None marks an untracked second derivative; it propagates as None
    def g(*args):
        if any(a is None for a in args):
            return None
        return f(*args)

    return g


_add = _lift(lambda a, b: a + b)
_sub = _lift(lambda a, b: a - b)
_neg = _lift(lambda a: -a)
_scale = _lift(lambda a, c: a * c)


class Jet2:
    """Value with first and diagonal second derivatives w.r.t. each input.

    An entry of ``dd`` may be ``None`` when that second derivative was not
    requested; arithmetic carries the ``None`` through.
    """

    __slots__ = ("value", "d", "dd")
    __array_ufunc__ = None

    def __init__(self, value, d, dd):
        if len(d) != len(dd):
            raise ValueError(f"d has {len(d)} entries but dd has {len(dd)}")
        self.value = value
        self.d = tuple(d)
        self.dd = tuple(dd)

    @property
    def n_in(self) -> int:
        return len(self.d)

    def __repr__(self):
        return f"Jet2(value={self.value!r}, d={list(self.d)!r}, dd={list(self.dd)!r})"

    def _check(self, other):
        if other.n_in != self.n_in:
            raise ValueError(f"jet input dimensions differ: {self.n_in} vs {other.n_in}")

    def __add__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            return Jet2(
                self.value + other.value,
                [a + b for a, b in zip(self.d, other.d)],
                [_add(a, b) for a, b in zip(self.dd, other.dd)],
            )
        return Jet2(self.value + other, self.d, self.dd)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, [-a for a in self.d], [_neg(a) for a in self.dd])

    def __sub__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            return Jet2(
                self.value - other.value,
                [a - b for a, b in zip(self.d, other.d)],
                [_sub(a, b) for a, b in zip(self.dd, other.dd)],
            )
        return Jet2(self.value - other, self.d, self.dd)

    def __rsub__(self, other):
        return Jet2(other - self.value, [-a for a in self.d], [_neg(a) for a in self.dd])

    def __mul__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            a, b = self.value, other.value
            d = [ai * b + a * bi for ai, bi in zip(self.d, other.d)]
            leibniz = _lift(lambda ai, bi, aii, bii: aii * b + 2.0 * (ai * bi) + a * bii)
            dd = [leibniz(*c) for c in zip(self.d, other.d, self.dd, other.dd)]
            return Jet2(a * b, d, dd)
        return Jet2(self.value * other, [a * other for a in self.d], [_scale(a, other) for a in self.dd])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def _chain(self, f0, f1, f2):
        d = [f1 * g for g in self.d]
        chain = _lift(lambda g, gg: f2 * (g * g) + f1 * gg)
        dd = [chain(g, gg) for g, gg in zip(self.d, self.dd)]
        return Jet2(f0, d, dd)

    def tanh(self):
        y = tanh(self.value)
        dy = 1.0 - y * y
        return self._chain(y, dy, -2.0 * (y * dy))

    def exp(self):
        y = exp(self.value)
        return self._chain(y, y, y)

    def sin(self):
        s, c = sin(self.value), cos(self.value)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = sin(self.value), cos(self.value)
        return self._chain(c, -s, -c)

    def reciprocal(self):
        r = 1.0 / self.value
        r2 = r * r
        return self._chain(r, -r2, 2.0 * (r2 * r))


def _dispatch(name, npfunc):
    def f(x):
        if isinstance(x, (Jet2, Var)):
            return getattr(x, name)()
        return npfunc(x)

    f.__name__ = name
    f.__doc__ = f"{name} of a float, array, :class:`Var` or :class:`Jet2`."
    return f


tanh = _dispatch("tanh", np.tanh)
exp = _dispatch("exp", np.exp)
sin = _dispatch("sin", np.sin)
cos = _dispatch("cos", np.cos)


def jet_const(c, n_in: int) -> Jet2:
    """Constant jet: all derivative channels are zero."""
    if n_in < 1:
        raise ValueError(f"n_in must be positive, got {n_in}")
    zero = np.zeros_like(c, dtype=np.float64) if np.ndim(c) else 0.0
    return Jet2(c, [zero] * n_in, [zero] * n_in)


def jet_var(x, i: int, n_in: int) -> Jet2:
    """Jet seeding input ``i``: d = e_i, dd = 0."""
    if not 0 <= i < n_in:
        raise IndexError(f"input index {i} out of range for n_in={n_in}")
    if np.ndim(x):
        zero, one = np.zeros_like(x, dtype=np.float64), np.ones_like(x, dtype=np.float64)
    else:
        zero, one = 0.0, 1.0
    d = [one if k == i else zero for k in range(n_in)]
    return Jet2(x, d, [zero] * n_in)


def jet_arith(a: Jet2, b: Jet2, op: str) -> Jet2:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        if not isinstance(b, Jet2) or a.n_in != b.n_in:
            raise ValueError("jet_arith needs two jets of equal input dimension")
        return a * b
    raise ValueError(f"unknown jet op {op!r}")


def jet_tanh(a: Jet2) -> Jet2:
    return a.tanh()


# -- stacked-channel dense layer
#
# A batch of jets over N points and F features is stored as one array of
# shape (C, N, F). Channel 0 is the value, channels 1..n are the first
# derivatives d_0..d_{n-1}, and the remaining channels are the second
# derivatives dd_i for i in ``second`` (in that order).


def _affine_channels(A, W, b):
    # the value channel gets its own matmul so it is bit-identical to a plain
    # forward pass over the same points
    C, N, _ = A.shape
    Z = np.empty((C, N, W.shape[1]))
    np.add(A[0] @ W, b, out=Z[0])
    if C > 1:
        np.matmul(A[1:].reshape((C - 1) * N, -1), W, out=Z[1:].reshape((C - 1) * N, -1))
    return Z


@numba.njit(cache=True)
def _tanh_jet_kernel(Z, y, n, second, out):
    C, N, F = Z.shape
    for p in range(N):
        for f in range(F):
            yv = y[p, f]
            s1 = 1.0 - yv * yv
            s2 = -2.0 * (yv * s1)
            out[0, p, f] = yv
            for c in range(1, 1 + n):
                out[c, p, f] = Z[c, p, f] * s1
            for k in range(second.shape[0]):
                zi = Z[1 + second[k], p, f]
                out[1 + n + k, p, f] = Z[1 + n + k, p, f] * s1 + s2 * (zi * zi)


@numba.njit(cache=True)
def _tanh_jet_vjp_kernel(G, Z, y, n, second, GZ):
    C, N, F = Z.shape
    for p in range(N):
        for f in range(F):
            yv = y[p, f]
            s1 = 1.0 - yv * yv
            s2 = -2.0 * (yv * s1)
            g_s1 = 0.0
            for c in range(1, C):
                GZ[c, p, f] = G[c, p, f] * s1
                g_s1 += G[c, p, f] * Z[c, p, f]
            g_s2 = 0.0
            for k in range(second.shape[0]):
                i = 1 + second[k]
                gk = G[1 + n + k, p, f]
                zi = Z[i, p, f]
                GZ[i, p, f] += 2.0 * s2 * (gk * zi)
                g_s2 += gk * (zi * zi)
            ds2 = -2.0 * (s1 * s1) - 2.0 * (yv * s2)
            GZ[0, p, f] = G[0, p, f] * s1 + g_s1 * s2 + g_s2 * ds2


def _tanh_channels(Z, n, second):
    y = np.tanh(Z[0])
    out = np.empty_like(Z)
    _tanh_jet_kernel(Z, y, n, np.asarray(second, dtype=np.int64), out)
    return out, y


def _tanh_channels_vjp(G, Z, n, second, y):
    GZ = np.empty_like(Z)
    _tanh_jet_vjp_kernel(np.ascontiguousarray(G), Z, y, n, np.asarray(second, dtype=np.int64), GZ)
    return GZ


def jet_dense(A, W, b, n_in: int, second=(), activate: bool = True):
    """``tanh(A @ W + b)`` (or just the affine map) on stacked jet channels.

    ``A`` has shape ``(C, N, F)`` with ``C = 1 + n_in + len(second)``. Any of
    ``A``, ``W`` and ``b`` may be :class:`Var` nodes; the result is then a
    node whose VJP is hand-derived for the whole layer.
    """
    second = tuple(second)
    vals = [x.value if isinstance(x, Var) else x for x in (A, W, b)]
    a, w, bias = vals
    if a.ndim != 3 or a.shape[0] != 1 + n_in + len(second):
        raise ValueError(f"stacked jet has shape {a.shape}, expected {1 + n_in + len(second)} channels")
    Z = _affine_channels(a, w, bias)
    if activate:
        out, cache = _tanh_channels(Z, n_in, second)
    else:
        out, cache = Z, None
    tape = next((x.tape for x in (A, W, b) if isinstance(x, Var)), None)
    if tape is None:
        return out
    parents = tuple(x for x in (A, W, b) if isinstance(x, Var))
    C, N = a.shape[:2]

    def vjp(G):
        GZ = _tanh_channels_vjp(G, Z, n_in, second, cache) if activate else G
        GZ2 = GZ.reshape(C * N, -1)
        grads = []
        if isinstance(A, Var):
            grads.append((GZ2 @ w.T).reshape(a.shape))
        if isinstance(W, Var):
            grads.append(a.reshape(C * N, -1).T @ GZ2)
        if isinstance(b, Var):
            grads.append(GZ[0].sum(axis=0))
        return grads

    return Var(out, tape, parents, vjp)
