"""Loss, optimizers and the hybrid training loop.

An iteration is one parameter update. Online mode (batch size 1) walks the
dataset in a seeded shuffled order; mini-batch mode averages the loss over
``batch_size`` consecutive samples of the same stream. After every update the
model is scored on the full dataset with infinite-shot probabilities.

With COBYLA each update is one short derivative-free cycle on the current
batch loss: a fresh linear-model simplex of radius rho around the current
parameters, closed by a trust-region step. Rho shrinks geometrically from
``rho_begin`` to ``rho_end`` over the run, the same contraction COBYLA applies
internally. The objective resamples shots on every call.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import log

import numpy as np
from scipy.optimize import minimize

from .data import Dataset
from .errors import CapabilityError, ConfigurationError
from .models import (
    EXACT,
    Backend,
    accuracy,
    circuit_for,
    expected_probability,
    init_params,
    is_quantum,
    model_probability,
    n_params,
    output_gradient,
    qnn_output_gradient,
)
from .statevector import sampled_class_probability

PROB_CLAMP = 1e-12
TRACE_COLUMNS = ("iteration", "loss", "accuracy", "trial", "model", "backend", "shots", "batch_size", "seed")


def bce_loss(p, label):
    """Binary cross-entropy with p clamped to [1e-12, 1 - 1e-12]."""
    p = np.clip(np.asarray(p, dtype=float), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(label, dtype=float)
    return -(y * np.log(p) + (1.0 - y) * np.log1p(-p))


def mean_loss(p, labels) -> float:
    return float(np.mean(bce_loss(p, labels)))


# -- Adam ---------------------------------------------------------------------


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, d: int) -> AdamState:
        return cls(np.zeros(d), np.zeros(d), 0)


def adam_step(state: AdamState, params, gradient, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; returns the new state and parameters."""
    g = np.asarray(gradient, dtype=float)
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * g
    v = beta2 * state.v + (1 - beta2) * g * g
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    new = np.asarray(params, dtype=float) - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(m, v, t), new


# -- gradients ------------------------------------------------------------------


def gradient(kind: str, params, features, labels, backend: Backend = EXACT, rng=None) -> np.ndarray:
    """Gradient of the mean BCE loss over a batch.

    Networks use backpropagation. Circuits use the parameter-shift rule on
    P(B) and the chain rule through the loss; on the ``sampled`` backend every
    shifted circuit is estimated from ``backend.shots`` measurements.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=float)
    w = np.asarray(params, dtype=float)
    if is_quantum(kind) and backend.name not in ("exact", "sampled"):
        raise CapabilityError(f"parameter-shift gradients are not defined on the {backend.name} backend")
    if backend.name == "sampled" and is_quantum(kind):
        gen = np.random.default_rng(rng)
        p, dp = qnn_output_gradient(circuit_for(kind), w, x, lambda s: sampled_class_probability(s, backend.shots, gen))
    else:
        p, dp = output_gradient(kind, w, x)
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    dl_dp = (pc - y) / (pc * (1.0 - pc))
    return (dl_dp[:, None] * dp).mean(axis=0)


# -- COBYLA ---------------------------------------------------------------------


@dataclass
class CobylaResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool


def cobyla_minimize(objective, x0, rho_begin: float = 0.5, rho_end: float = 1e-3, max_evals: int = 200, constraints=()) -> CobylaResult:
    """Powell's COBYLA (scipy's implementation) returning the best feasible point evaluated.

    ``constraints`` are callables that must stay >= 0. ``converged`` is False
    when the evaluation budget ran out before the trust region shrank to
    ``rho_end``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    best = {"x": x0.copy(), "f": np.inf, "n": 0}

    def tracked(x):
        f = float(objective(x))
        best["n"] += 1
        feasible = all(c(x) >= -1e-10 for c in constraints)
        if feasible and f < best["f"]:
            best["f"], best["x"] = f, np.array(x, dtype=float)
        return f

    cons = [{"type": "ineq", "fun": c} for c in constraints]
    res = minimize(tracked, x0, method="COBYLA", constraints=cons,
                   options={"rhobeg": rho_begin, "tol": rho_end, "maxiter": max_evals})
    budget_hit = best["n"] >= max_evals and res.status != 1
    return CobylaResult(best["x"], best["f"], best["n"], bool(res.success and not budget_hit))


# -- training loop --------------------------------------------------------------


@dataclass(frozen=True)
class Adam:
    lr: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass(frozen=True)
class Cobyla:
    """``evals_per_update`` defaults to d + 2: the d + 1 simplex points and one step."""

    rho_begin: float = 0.5
    rho_end: float = 1e-3
    evals_per_update: int | None = None

    def rho_at(self, iteration: int, total: int) -> float:
        if total <= 1:
            return self.rho_begin
        frac = (iteration - 1) / (total - 1)
        return self.rho_begin * (self.rho_end / self.rho_begin) ** frac


@dataclass(frozen=True)
class TrainConfig:
    optimizer: Adam | Cobyla = field(default_factory=Cobyla)
    batch_size: int = 1
    max_iterations: int = 200
    backend: Backend = EXACT
    seed: int = 0
    init: np.ndarray | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be >= 0")


@dataclass
class TrainTrace:
    model: str
    iterations: list[int] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    params: list[np.ndarray] = field(default_factory=list)
    backend: str = "exact"
    shots: int | None = None
    batch_size: int = 1
    seed: int = 0
    trial: int = 0

    def record(self, it: int, loss: float, acc: float, params) -> None:
        self.iterations.append(it)
        self.loss.append(float(loss))
        self.accuracy.append(float(acc))
        self.params.append(np.array(params, dtype=float))

    def __len__(self) -> int:
        return len(self.iterations)

    @property
    def final_params(self) -> np.ndarray:
        return self.params[-1]

    def converged(self, window: int = 5) -> tuple[float, float]:
        """Mean loss and accuracy over the last ``window`` records."""
        return float(np.mean(self.loss[-window:])), float(np.mean(self.accuracy[-window:]))

    def rows(self):
        shots = "" if self.shots is None else self.shots
        for it, l, a in zip(self.iterations, self.loss, self.accuracy):
            yield (it, repr(l), repr(a), self.trial, self.model, self.backend, shots, self.batch_size, self.seed)


def traces_to_csv(traces, path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for tr in traces:
        writer.writerows(tr.rows())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as f:
            f.write(text)
    return text


class _SampleStream:
    """Endless stream of sample indices, reshuffled every pass."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n, self.rng = n, rng
        self.buf = np.empty(0, dtype=int)

    def take(self, k: int) -> np.ndarray:
        while len(self.buf) < k:
            self.buf = np.concatenate([self.buf, self.rng.permutation(self.n)])
        out, self.buf = self.buf[:k], self.buf[k:]
        return out


def train(kind: str, dataset: Dataset, config: TrainConfig, trial: int = 0) -> TrainTrace:
    """Train one model and return its per-iteration trace (iteration 0 is the initial point)."""
    if config.batch_size > len(dataset):
        raise ConfigurationError("batch_size exceeds dataset size")
    backend = config.backend
    if not is_quantum(kind) and backend.name != "exact":
        backend = EXACT
    rng = np.random.default_rng(config.seed)
    init_rng, stream_rng, shot_rng, orient_rng = rng.spawn(4)
    w = init_params(kind, init_rng) if config.init is None else np.array(config.init, dtype=float)
    if w.shape != (n_params(kind),):
        raise ConfigurationError(f"{kind} init must have {n_params(kind)} entries")
    x, y = dataset.features, dataset.labels
    trace = TrainTrace(kind, backend=backend.name, shots=backend.shots, batch_size=config.batch_size,
                       seed=config.seed, trial=trial)

    def score(params):
        p = expected_probability(kind, params, x, backend)
        trace.record(len(trace), mean_loss(p, y), accuracy(p, y), params)

    score(w)
    stream = _SampleStream(len(dataset), stream_rng)
    opt = config.optimizer
    adam_state = AdamState.zeros(len(w))
    for it in range(1, config.max_iterations + 1):
        idx = stream.take(config.batch_size)
        xb, yb = x[idx], y[idx]
        if isinstance(opt, Cobyla):
            rho = opt.rho_at(it, config.max_iterations)

            signs = orient_rng.choice((-1.0, 1.0), size=len(w))
            origin = w

            def objective(z):
                return mean_loss(model_probability(kind, origin + signs * z, xb, backend, shot_rng), yb)

            evals = opt.evals_per_update or len(w) + 2
            w = origin + signs * cobyla_minimize(objective, np.zeros_like(w), rho, rho / 10, evals).x
        else:
            g = gradient(kind, w, xb, yb, backend, shot_rng)
            adam_state, w = adam_step(adam_state, w, g, opt.lr, opt.beta1, opt.beta2, opt.eps)
        score(w)
    return trace


def random_guess_loss() -> float:
    return log(2.0)
