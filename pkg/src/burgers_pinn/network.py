"""Fully connected tanh network on space-time inputs.

Weights are stored as ``(fan_in, fan_out)`` matrices so a layer reads
``a @ W + b`` on a batch ``a`` of shape ``(N, fan_in)``.

Checkpoint layout (little-endian throughout)::

    8 bytes   magic b"BPINNCK1"
    uint32    number of layer dims K
    K*uint32  layer dims
    int64     seed
    uint8     1 if an input box follows, else 0
    [n_in * 2 float64 lower bounds then upper bounds]
    uint64    parameter count P
    P*float64 flat parameters (layer by layer: W row-major, then b)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .derivkit import Jet2, Tape, jet_dense, tanh

PAPER_DEPTHS = (3, 4, 5, 6, 7)
PAPER_WIDTHS = (20, 30, 40, 50, 60)

_MAGIC = b"BPINNCK1"


@dataclass
class Mlp:
    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int = 0
    # physical box mapped affinely onto [-1, 1]^n_in; None disables normalization
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    _scale: np.ndarray = field(init=False, repr=False)
    _shift: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.layer_dims = [int(d) for d in self.layer_dims]
        _check_dims(self.layer_dims)
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_dims[k], self.layer_dims[k + 1])
            if W.shape != expect or b.shape != (expect[1],):
                raise ValueError(f"layer {k}: got W{W.shape}, b{b.shape}; expected W{expect}")
        self.set_box(self.lower, self.upper)

    def set_box(self, lower, upper):
        n_in = self.n_in
        if lower is None or upper is None:
            self.lower = self.upper = None
            self._scale = np.ones(n_in)
            self._shift = np.zeros(n_in)
            return
        lower = np.asarray(lower, dtype=np.float64).reshape(n_in)
        upper = np.asarray(upper, dtype=np.float64).reshape(n_in)
        if np.any(upper <= lower):
            raise ValueError("input box needs lower < upper in every dimension")
        self.lower, self.upper = lower, upper
        self._scale = 2.0 / (upper - lower)
        self._shift = -1.0 - lower * self._scale

    @property
    def n_in(self) -> int:
        return self.layer_dims[0]

    @property
    def n_out(self) -> int:
        return self.layer_dims[-1]

    @property
    def depth(self) -> int:
        return len(self.layer_dims) - 2

    @property
    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    @property
    def paper_conforming(self) -> bool:
        hidden = self.layer_dims[1:-1]
        return (
            self.n_in in (2, 3)
            and self.n_out in (1, 2)
            and len(hidden) in PAPER_DEPTHS
            and len(set(hidden)) == 1
            and hidden[0] in PAPER_WIDTHS
        )

    def normalize(self, points: np.ndarray) -> np.ndarray:
        return points * self._scale + self._shift


def _check_dims(dims):
    if len(dims) < 2:
        raise ValueError(f"need at least input and output dims, got {dims}")
    if any(d < 1 for d in dims):
        raise ValueError(f"layer dims must be positive, got {dims}")


def hidden_dims(n_in: int, depth: int, width: int, n_out: int) -> list[int]:
    return [n_in] + [width] * depth + [n_out]


def init(layer_dims, seed: int, lower=None, upper=None) -> Mlp:
    """Glorot-uniform weights and zero biases, reproducible from ``seed``."""
    dims = [int(d) for d in layer_dims]
    _check_dims(dims)
    if int(seed) < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6E6574]))
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(dims, weights, biases, seed=int(seed), lower=lower, upper=upper)


def get_params(net: Mlp) -> np.ndarray:
    return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in zip(net.weights, net.biases)])


def set_params(net: Mlp, theta) -> None:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (net.n_params,):
        raise ValueError(f"expected {net.n_params} parameters, got shape {theta.shape}")
    pos = 0
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        net.weights[k] = theta[pos : pos + W.size].reshape(W.shape).copy()
        pos += W.size
        net.biases[k] = theta[pos : pos + b.size].copy()
        pos += b.size


def _as_batch(net: Mlp, points) -> tuple[np.ndarray, bool]:
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.ndim != 2 or pts.shape[1] != net.n_in:
        raise ValueError(f"expected points with {net.n_in} coordinates, got shape {np.shape(points)}")
    return pts, single


def _layers(net: Mlp, tape: Tape | None):
    if tape is None:
        return list(zip(net.weights, net.biases))
    if id(net) not in tape.bindings:
        tape.bindings[id(net)] = [(tape.param(W), tape.param(b)) for W, b in zip(net.weights, net.biases)]
    return tape.bindings[id(net)]


def forward(net: Mlp, points, tape: Tape | None = None):
    """Network outputs at ``points`` of shape ``(n_in,)`` or ``(N, n_in)``.

    With a ``tape`` the parameters are registered on it and a :class:`Var`
    of shape ``(N, n_out)`` is returned.
    """
    pts, single = _as_batch(net, points)
    layers = _layers(net, tape)
    a = net.normalize(pts)
    for W, b in layers[:-1]:
        a = tanh(a @ W + b)
    W, b = layers[-1]
    out = a @ W + b
    if single and tape is None:
        return out[0]
    return out


def forward_jet(net: Mlp, points, tape: Tape | None = None, second=None) -> list[Jet2]:
    """One jet per output carrying value, gradient and diagonal Hessian.

    Derivatives are with respect to the physical inputs: the constant
    Jacobian of the normalization map is folded into the input seeds.
    ``second`` selects the inputs whose second derivative is tracked
    (default: all); untracked ``dd`` entries are ``None``.
    """
    pts, single = _as_batch(net, points)
    n = net.n_in
    second = tuple(range(n)) if second is None else tuple(second)
    A = input_channels(net, pts, second)
    layers = _layers(net, tape)
    for W, b in layers[:-1]:
        A = jet_dense(A, W, b, n, second)
    out = jet_dense(A, *layers[-1], n, second, activate=False)
    slot = {i: 1 + n + k for k, i in enumerate(second)}
    jets = []
    for k in range(net.n_out):
        col = out[:, :, k]
        value = col[0]
        d = [col[1 + i] for i in range(n)]
        dd = [col[slot[i]] if i in slot else None for i in range(n)]
        if single and tape is None:
            value = float(value[0])
            d = [float(x[0]) for x in d]
            dd = [None if x is None else float(x[0]) for x in dd]
        jets.append(Jet2(value, d, dd))
    return jets


def input_channels(net: Mlp, pts: np.ndarray, second) -> np.ndarray:
    """Stacked jet of the normalized inputs, shape ``(1 + n + len(second), N, n)``."""
    n = net.n_in
    A = np.zeros((1 + n + len(second), len(pts), n))
    A[0] = net.normalize(pts)
    for i in range(n):
        A[1 + i, :, i] = net._scale[i]
    return A


def save_checkpoint(net: Mlp, path) -> None:
    theta = get_params(net)
    buf = bytearray(_MAGIC)
    buf += struct.pack("<I", len(net.layer_dims))
    buf += struct.pack(f"<{len(net.layer_dims)}I", *net.layer_dims)
    buf += struct.pack("<q", net.seed)
    if net.lower is None:
        buf += struct.pack("<B", 0)
    else:
        buf += struct.pack("<B", 1)
        buf += np.concatenate([net.lower, net.upper]).astype("<f8").tobytes()
    buf += struct.pack("<Q", theta.size)
    buf += theta.astype("<f8").tobytes()
    from .config import atomic_write_bytes

    atomic_write_bytes(path, bytes(buf))


def load_checkpoint(path) -> Mlp:
    data = Path(path).read_bytes()
    if data[:8] != _MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    pos = 8
    (k,) = struct.unpack_from("<I", data, pos)
    pos += 4
    dims = list(struct.unpack_from(f"<{k}I", data, pos))
    pos += 4 * k
    (seed,) = struct.unpack_from("<q", data, pos)
    pos += 8
    (has_box,) = struct.unpack_from("<B", data, pos)
    pos += 1
    lower = upper = None
    if has_box:
        box = np.frombuffer(data, dtype="<f8", count=2 * dims[0], offset=pos).astype(np.float64)
        lower, upper = box[: dims[0]], box[dims[0] :]
        pos += 16 * dims[0]
    (p,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    theta = np.frombuffer(data, dtype="<f8", count=p, offset=pos).astype(np.float64)
    if pos + 8 * p != len(data):
        raise ValueError(f"{path}: trailing or missing bytes")
    net = init(dims, seed, lower, upper)
    set_params(net, theta)
    return net
