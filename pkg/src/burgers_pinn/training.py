"""Physics-informed loss, Adam and the training loop."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import network
from .derivkit import Tape, param_gradient
from .network import Mlp
from .problems import ProblemSpec
from .sampling import SampleSet, default_counts, sample_problem

log = logging.getLogger(__name__)

LAMBDA_DEFAULT = 10.0


class TrainingDiverged(FloatingPointError):
    """Non-finite loss during training."""

    def __init__(self, epoch: int, breakdown: "LossBreakdown"):
        self.epoch = epoch
        self.breakdown = breakdown
        super().__init__(
            f"non-finite loss at epoch {epoch}: pde={breakdown.pde!r} ic={breakdown.ic!r} "
            f"bc={breakdown.bc!r} total={breakdown.total!r}"
        )


@dataclass(frozen=True)
class LossBreakdown:
    pde: float
    ic: float
    bc: float
    lambda_ic: float = LAMBDA_DEFAULT
    lambda_bc: float = LAMBDA_DEFAULT
    total: float = field(default=None)

    def __post_init__(self):
        if self.total is None:
            object.__setattr__(self, "total", compose_total(self.pde, self.ic, self.bc, self.lambda_ic, self.lambda_bc))

    @property
    def is_finite(self) -> bool:
        return all(math.isfinite(x) for x in (self.pde, self.ic, self.bc, self.total))


def compose_total(pde, ic, bc, lambda_ic, lambda_bc):
    # the tape builds the total with exactly this operation order
    return pde + lambda_ic * ic + lambda_bc * bc


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eta: float = 1e-3
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, **hyper)


def adam_step(state: AdamState, theta, g):
    """One bias-corrected Adam update; returns ``(new_state, new_theta)``."""
    theta = np.asarray(theta, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if not (theta.shape == g.shape == state.m.shape):
        raise ValueError(f"length mismatch: theta {theta.shape}, g {g.shape}, state {state.m.shape}")
    b1, b2 = state.beta1, state.beta2
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * (g * g)
    m_hat = m / (1.0 - b1**t)
    v_hat = v / (1.0 - b2**t)
    new_theta = theta - state.eta * m_hat / (np.sqrt(v_hat) + state.eps)
    return AdamState(m, v, t, b1, b2, state.eta, state.eps), new_theta


@dataclass
class TrainConfig:
    layers: int = 4
    width: int = 40
    epochs: int | None = None
    n_interior: int | None = None
    n_initial: int | None = None
    n_boundary: int | None = None
    seed: int = 0
    resample: bool = False
    lambda_ic: float = LAMBDA_DEFAULT
    lambda_bc: float = LAMBDA_DEFAULT
    learning_rate: float = 1e-3
    normalize: bool = True
    log_every: int = 1
    max_seconds: float | None = None

    def resolved(self, problem: ProblemSpec) -> "TrainConfig":
        """Copy with problem-dependent defaults filled in."""
        n_r, n_0, n_b = default_counts(problem)
        epochs = self.epochs
        if epochs is None:
            epochs = 20000 if problem.n_space == 1 else 40000
        return TrainConfig(
            **{
                **self.__dict__,
                "epochs": epochs,
                "n_interior": self.n_interior or n_r,
                "n_initial": self.n_initial or n_0,
                "n_boundary": self.n_boundary or n_b,
            }
        )

    def validate(self):
        if self.epochs is not None and self.epochs < 1:
            raise ValueError(f"epochs must be at least 1, got {self.epochs}")
        if self.lambda_ic < 0 or self.lambda_bc < 0:
            raise ValueError("loss weights must be non-negative")
        if self.layers < 1 or self.width < 1:
            raise ValueError("layers and width must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.log_every < 1:
            raise ValueError("log_every must be at least 1")

    @property
    def counts(self):
        return self.n_interior, self.n_initial, self.n_boundary


@dataclass
class _Targets:
    samples: SampleSet
    ic: np.ndarray
    bc: np.ndarray


def _targets(problem: ProblemSpec, samples: SampleSet) -> _Targets:
    for name, pts in (("interior", samples.interior), ("initial", samples.initial), ("boundary", samples.boundary)):
        if len(pts) == 0:
            raise ValueError(f"empty {name} sample set")
    return _Targets(samples, problem.exact(samples.initial), problem.exact(samples.boundary))


def _assemble(net: Mlp, problem: ProblemSpec, targets: _Targets, lambda_ic, lambda_bc, tape=None):
    if (net.n_in, net.n_out) != (problem.n_in, problem.n_out):
        raise ValueError(
            f"network maps {net.n_in}->{net.n_out} but {problem.id} needs {problem.n_in}->{problem.n_out}"
        )
    s = targets.samples
    jets = network.forward_jet(net, s.interior, tape=tape, second=range(problem.n_space))
    res = problem.residual(s.interior, jets)
    sq = res[0] * res[0]
    for f in res[1:]:
        sq = sq + f * f
    pde = sq.sum() / len(s.interior)

    def mse(points, target):
        diff = network.forward(net, points, tape=tape) - target
        return (diff * diff).sum() / len(points)

    ic = mse(s.initial, targets.ic)
    bc = mse(s.boundary, targets.bc)
    total = compose_total(pde, ic, bc, lambda_ic, lambda_bc)
    val = (lambda x: float(x.value)) if tape is not None else float
    return LossBreakdown(val(pde), val(ic), val(bc), lambda_ic, lambda_bc, val(total)), total


def loss(net: Mlp, problem: ProblemSpec, samples: SampleSet, lambda_ic=LAMBDA_DEFAULT, lambda_bc=LAMBDA_DEFAULT):
    """Composite loss ``pde + lambda_ic * ic + lambda_bc * bc`` with its parts."""
    breakdown, _ = _assemble(net, problem, _targets(problem, samples), lambda_ic, lambda_bc)
    return breakdown


def loss_and_gradient(net, problem, samples, lambda_ic=LAMBDA_DEFAULT, lambda_bc=LAMBDA_DEFAULT, targets=None):
    targets = targets or _targets(problem, samples)
    tape = Tape()
    breakdown, total = _assemble(net, problem, targets, lambda_ic, lambda_bc, tape=tape)
    tape.finalize(total)
    grad = param_gradient(tape)
    tape.release()
    return breakdown, grad


@dataclass
class TrainResult:
    net: Mlp
    history: list[tuple[int, LossBreakdown]]
    config: TrainConfig
    stopped_early: bool = False


def build_network(problem: ProblemSpec, config: TrainConfig) -> Mlp:
    dims = network.hidden_dims(problem.n_in, config.layers, config.width, problem.n_out)
    if config.normalize:
        return network.init(dims, config.seed, problem.lower, problem.upper)
    return network.init(dims, config.seed)


def train(problem: ProblemSpec, config: TrainConfig, net: Mlp | None = None, callback=None) -> TrainResult:
    """Full-batch Adam on the physics-informed loss.

    The history holds ``(epoch, LossBreakdown)`` for every ``log_every``-th
    epoch and for the last one; each entry is the loss at the parameters the
    epoch's update started from.
    """
    config.validate()
    cfg = config.resolved(problem)
    if net is None:
        net = build_network(problem, cfg)
    if not cfg.normalize and not net.paper_conforming:
        log.debug("network %s is outside the paper grid", net.layer_dims)
    theta = network.get_params(net)
    state = AdamState.zeros(theta.size, eta=cfg.learning_rate)
    targets = _targets(problem, sample_problem(problem, cfg.counts, cfg.seed, 0))
    history = []
    start = time.monotonic()
    stopped = False
    for epoch in range(cfg.epochs):
        if cfg.resample and epoch > 0:
            targets = _targets(problem, sample_problem(problem, cfg.counts, cfg.seed, epoch))
        breakdown, grad = loss_and_gradient(net, problem, None, cfg.lambda_ic, cfg.lambda_bc, targets)
        if not breakdown.is_finite or not np.all(np.isfinite(grad)):
            raise TrainingDiverged(epoch, breakdown)
        last = epoch == cfg.epochs - 1
        if epoch % cfg.log_every == 0 or last:
            history.append((epoch, breakdown))
        state, theta = adam_step(state, theta, grad)
        network.set_params(net, theta)
        if callback is not None:
            callback(epoch, breakdown)
        if cfg.max_seconds is not None and time.monotonic() - start > cfg.max_seconds and not last:
            log.warning("wallclock guard hit after %d epochs", epoch + 1)
            if history[-1][0] != epoch:
                history.append((epoch, breakdown))
            stopped = True
            break
    _check_trend(history)
    return TrainResult(net, history, cfg, stopped)


def _check_trend(history, window=100):
    totals = np.array([b.total for _, b in history])
    if len(totals) < 2 * window:
        return
    avg = np.convolve(totals, np.ones(window) / window, mode="valid")
    rises = np.count_nonzero(np.diff(avg[::window]) > 0)
    if rises:
        log.warning("moving-average loss increased in %d of %d windows", rises, len(avg[::window]) - 1)


HISTORY_HEADER = "epoch,pde,ic,bc,total"


def history_csv(history) -> str:
    lines = [HISTORY_HEADER]
    for epoch, b in history:
        lines.append(f"{epoch},{b.pde!r},{b.ic!r},{b.bc!r},{b.total!r}")
    return "\n".join(lines) + "\n"


def parse_history_csv(text: str, lambda_ic=LAMBDA_DEFAULT, lambda_bc=LAMBDA_DEFAULT):
    rows = text.strip().splitlines()
    if rows[0] != HISTORY_HEADER:
        raise ValueError(f"unexpected header {rows[0]!r}")
    out = []
    for row in rows[1:]:
        epoch, pde, ic, bc, total = row.split(",")
        out.append((int(epoch), LossBreakdown(float(pde), float(ic), float(bc), lambda_ic, lambda_bc, float(total))))
    return out
