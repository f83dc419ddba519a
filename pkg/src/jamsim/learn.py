"""Learning a jammer's per-OFDM-symbol power allocation.

The jammer maximizes the receiver's soft-bit error, so the optimizer
minimizes the negative loss. Gradients come from central finite
differences with common random numbers: every perturbed allocation is
evaluated on the same frames, which makes the Monte-Carlo objective a
smooth deterministic function of theta for a given seed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import link
from . import rng as _rng
from .config import Scenario
from .jammer import PowerAllocation

log = logging.getLogger(__name__)

LOSS_KINDS = ("bce", "l1", "mse")
BCE_CLAMP = 1e-12


def loss(b, b_hat, kind: str = "l1", axis=None) -> float | np.ndarray:
    """Soft-bit error between true bits and probability estimates P(b=1)."""
    b = np.asarray(b, dtype=float)
    b_hat = np.asarray(b_hat, dtype=float)
    if b.size == 0 or b_hat.size == 0:
        raise ValueError("empty bit vector")
    if kind == "l1":
        return np.mean(np.abs(b - b_hat), axis=axis)
    if kind == "mse":
        return np.mean((b - b_hat) ** 2, axis=axis)
    if kind == "bce":
        p = np.clip(b_hat, BCE_CLAMP, 1 - BCE_CLAMP)
        return -np.mean(b * np.log(p) + (1 - b) * np.log1p(-p), axis=axis)
    raise ValueError(f"unknown loss {kind!r}")


def multi_loss(b_info, outs, kind: str = "l1"):
    """Unweighted mean of the per-iteration losses; ``outs`` is (n_iters, ..., K)
    or an :class:`~jamsim.fec.IterationOutputs`."""
    probs = getattr(outs, "probs", outs)
    probs = np.asarray(probs)
    if probs.shape[0] == 0:
        raise ValueError("no decoder iterations to average")
    return float(np.mean([loss(b_info, p, kind) for p in probs]))


def softmax(theta, axis=-1):
    z = np.asarray(theta, dtype=float)
    z = np.exp(z - z.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def reparam_power(theta, rho_max: float, n_symbols: int | None = None) -> PowerAllocation:
    """rho = rho_max * N_s * softmax(theta): the budget is always spent exactly."""
    if not rho_max > 0:
        raise ValueError("rho_max must be positive")
    theta = np.asarray(theta, dtype=float)
    n_symbols = theta.shape[-1] if n_symbols is None else n_symbols
    if theta.shape[-1] != n_symbols:
        raise ValueError("theta length must equal the number of OFDM symbols")
    return PowerAllocation(rho_max * n_symbols * softmax(theta), rho_max)


def allocations(thetas, rho_max: float) -> np.ndarray:
    thetas = np.atleast_2d(thetas)
    return rho_max * thetas.shape[-1] * softmax(thetas)


def eval_losses(thetas, scenario: Scenario, batch: int, seed: int, snr_db: float = 0.0,
                kind: str = "l1", first_frame: int = 0) -> np.ndarray:
    """Mean jammer loss of each theta row, all rows evaluated on the same frames."""
    rhos = allocations(thetas, scenario.rho_max)
    res = link.simulate_llr(scenario, rhos, batch, snr_db, seed, first_frame)
    ref, soft = link.soft_outputs(scenario, res)
    if scenario.code is None:
        return np.array([loss(ref, s, kind) for s in soft])
    # soft: (n_iters, P, F, n_cw, K)
    return np.array([multi_loss(ref, soft[:, p], kind) for p in range(soft.shape[1])])


def eval_pipeline(theta, scenario: Scenario, batch: int, seed: int, snr_db: float = 0.0,
                  kind: str = "l1") -> float:
    """Minimization objective: negative mean jammer loss over ``batch`` frames."""
    return -float(eval_losses(np.atleast_2d(theta), scenario, batch, seed, snr_db, kind)[0])


def fd_gradient(fun, theta, h: float = 1e-2, batched: bool = False, return_value: bool = False):
    """Central-difference gradient.

    With ``batched=True``, ``fun`` maps an (n, d) array of points to n
    values in one call (the center point first), which is how common random
    numbers are shared across all perturbations.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    pts = np.concatenate([theta[None], theta + h * np.eye(d), theta - h * np.eye(d)])
    vals = np.asarray(fun(pts) if batched else [fun(p) for p in pts], dtype=float)
    grad = (vals[1:d + 1] - vals[d + 1:]) / (2 * h)
    return (grad, vals[0]) if return_value else grad


def grad_fd(theta, scenario: Scenario, batch: int, fd_step: float, seed: int, snr_db: float = 0.0,
            kind: str = "l1", return_value: bool = False):
    """Gradient of :func:`eval_pipeline` with common random numbers across all 2 N_s + 1 points."""
    def fun(pts):
        return -eval_losses(pts, scenario, batch, seed, snr_db, kind)
    return fd_gradient(fun, theta, fd_step, batched=True, return_value=return_value)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **kw)


def adam_step(state: AdamState, theta, grad):
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape or state.m.shape != theta.shape:
        raise ValueError(f"shape mismatch: theta {theta.shape}, grad {grad.shape}, state {state.m.shape}")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad ** 2
    m_hat = m / (1 - state.beta1 ** t)
    v_hat = v / (1 - state.beta2 ** t)
    new = AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.eps)
    return new, theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 500
    batch: int = 32
    snr_db: float = 0.0
    loss: str = "l1"
    fd_step: float = 1e-2
    lr: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1 or self.batch < 1:
            raise ValueError("steps and batch must be >= 1")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss!r}")

    @classmethod
    def full_scale(cls, **kw) -> "TrainConfig":
        """5000 Adam steps at lr 1e-3 on batches of 64 frames at 0 dB."""
        return cls(**{"steps": 5000, "batch": 64, "lr": 1e-3, **kw})


@dataclass
class TrainResult:
    allocation: PowerAllocation
    theta: np.ndarray
    history: list = field(default_factory=list)  # objective per step
    rho_trace: list = field(default_factory=list)


def train(config: TrainConfig, scenario: Scenario, theta0=None, progress=None) -> TrainResult:
    """Adam on the finite-difference gradient; fresh frames every step."""
    if not scenario.jammed:
        raise ValueError("training needs a jammer with a power budget")
    n_s = scenario.grid.n_symbols
    theta = np.zeros(n_s) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    state = AdamState.zeros(n_s, lr=config.lr)
    out = TrainResult(reparam_power(theta, scenario.rho_max), theta)
    for step in range(config.steps):
        step_seed = _rng.derive_seed(config.seed, _rng.STEP, step)
        grad, value = grad_fd(theta, scenario, config.batch, config.fd_step, step_seed,
                              config.snr_db, config.loss, return_value=True)
        state, theta = adam_step(state, theta, grad)
        out.history.append(value)
        out.rho_trace.append(allocations(theta, scenario.rho_max)[0].tolist())
        if progress is not None:
            progress(step, value, theta)
        elif step % 100 == 0:
            log.info("step %d objective %.6f", step, value)
    out.theta = theta
    out.allocation = reparam_power(theta, scenario.rho_max)
    return out
