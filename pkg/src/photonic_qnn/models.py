"""The four parameter-matched binary classifiers behind one prediction interface.

Every model maps two features in [0, 1] to P(class B). Quantum models read
this off the odd-parity probability of a two-qubit circuit; classical models
are bias-free sigmoid networks with the same number of weights.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import pi

import numpy as np

from .errors import CapabilityError, ConfigurationError
from .photonics import NoiseParams, accepted_outcome_probabilities, compile_circuit_to_photonics, sample_accepted_parity
from .statevector import ParameterizedCircuit, class_probability, qnn2_circuit, qnn6_circuit, run_circuit

QNN_KINDS = ("QNN2", "QNN6")
ANN_KINDS = ("ANN2", "ANN6")
MODEL_KINDS = QNN_KINDS + ANN_KINDS
N_PARAMS = {"QNN2": 2, "QNN6": 6, "ANN2": 2, "ANN6": 6}

BACKENDS = ("exact", "sampled", "photonic", "gate_noise")


def n_params(kind: str) -> int:
    try:
        return N_PARAMS[kind]
    except KeyError:
        raise ConfigurationError(f"unknown model kind {kind!r}") from None


def is_quantum(kind: str) -> bool:
    n_params(kind)
    return kind in QNN_KINDS


@lru_cache(maxsize=None)
def circuit_for(kind: str, encoding_scale: float | None = None) -> ParameterizedCircuit:
    builders = {"QNN2": qnn2_circuit, "QNN6": qnn6_circuit}
    if kind not in builders:
        raise ConfigurationError(f"{kind} has no circuit")
    return builders[kind]() if encoding_scale is None else builders[kind](encoding_scale)


@dataclass(frozen=True)
class Backend:
    """Where quantum models are evaluated.

    ``exact`` returns statevector probabilities. ``sampled`` estimates them
    from ``shots`` projective measurements. ``photonic`` runs the dual-rail
    emulation with ``noise`` and counts ``shots`` postselected detections.
    ``gate_noise`` is the sampled statevector with a depolarizing strength
    ``depolarizing`` per gate.
    """

    name: str = "exact"
    shots: int | None = None
    noise: NoiseParams | None = None
    depolarizing: float = 0.0

    def __post_init__(self):
        if self.name not in BACKENDS:
            raise ConfigurationError(f"unknown backend {self.name!r}")
        if self.name in ("sampled", "gate_noise") and not self.shots:
            raise ConfigurationError(f"{self.name} backend needs a shot count")
        if self.shots is not None and self.shots < 1:
            raise ConfigurationError("shots must be >= 1")
        if self.name == "photonic" and self.noise is None:
            object.__setattr__(self, "noise", NoiseParams())
        if not 0.0 <= self.depolarizing <= 1.0:
            raise ConfigurationError("depolarizing strength must lie in [0, 1]")

    @property
    def is_stochastic(self) -> bool:
        return self.shots is not None

    @property
    def label(self) -> str:
        return self.name if self.shots is None else f"{self.name}({self.shots})"

    def to_dict(self) -> dict:
        out = {"name": self.name, "shots": self.shots, "depolarizing": self.depolarizing}
        out["noise"] = None if self.noise is None else vars(self.noise).copy()
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> Backend:
        noise = doc.get("noise")
        return cls(
            name=doc.get("name", "exact"),
            shots=doc.get("shots"),
            noise=None if noise is None else NoiseParams(**noise),
            depolarizing=float(doc.get("depolarizing", 0.0)),
        )


EXACT = Backend()


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def ann2_forward(params, features):
    """Single-layer perceptron without bias: sigma(w0 x0 + w1 x1)."""
    w = np.asarray(params, dtype=float)
    x = np.asarray(features, dtype=float)
    return sigmoid(x @ w)


def _ann6_split(params):
    w = np.asarray(params, dtype=float)
    if w.shape != (6,):
        raise ConfigurationError(f"ANN6 needs 6 weights, got shape {w.shape}")
    return w[:4].reshape(2, 2), w[4:]


def ann6_forward(params, features):
    """Two sigmoid hidden units feeding one sigmoid output, no biases.

    Weight order is (w00, w01, w10, w11, v0, v1): row j of ``w`` feeds hidden unit j.
    """
    hidden_w, out_w = _ann6_split(params)
    h = sigmoid(np.asarray(features, dtype=float) @ hidden_w.T)
    return sigmoid(h @ out_w)


def ann_output_gradient(kind: str, params, features) -> tuple[np.ndarray, np.ndarray]:
    """Backpropagated P(B) and its parameter gradient, shapes ``(n,)`` and ``(n, d)``."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if kind == "ANN2":
        p = ann2_forward(params, x)
        return p, (p * (1 - p))[:, None] * x
    if kind == "ANN6":
        hidden_w, out_w = _ann6_split(params)
        h = sigmoid(x @ hidden_w.T)
        p = sigmoid(h @ out_w)
        dz = p * (1 - p)
        d_out = dz[:, None] * h
        d_hidden = (dz[:, None] * out_w * h * (1 - h))[:, :, None] * x[:, None, :]
        return p, np.concatenate([d_hidden.reshape(len(x), 4), d_out], axis=1)
    raise ConfigurationError(f"{kind} is not a classical model")


def qnn_output_gradient(circuit: ParameterizedCircuit, params, features, estimator=None) -> tuple[np.ndarray, np.ndarray]:
    """P(B) and its parameter gradient by the parameter-shift rule.

    For a gate exp(-i t P / 2) the derivative of any expectation is half the
    difference of evaluations at t + pi/2 and t - pi/2; weights used by several
    gates sum the per-occurrence shifts. ``estimator(state) -> P(B)`` defaults
    to the exact parity probability and can be swapped for a shot-sampled one.
    """
    est = class_probability if estimator is None else estimator
    x = np.atleast_2d(np.asarray(features, dtype=float))
    w = np.asarray(params, dtype=float)
    p = np.asarray(est(run_circuit(circuit, x, w)), dtype=float)
    grad = np.zeros((len(x), circuit.weight_slots))
    for j in range(circuit.weight_slots):
        for gi in circuit.weight_occurrences(j):
            if not circuit.gates[gi].is_rotation:
                raise CapabilityError(f"weight w{j} drives a non-rotation gate")
            plus = est(run_circuit(circuit, x, w, shift=(gi, pi / 2)))
            minus = est(run_circuit(circuit, x, w, shift=(gi, -pi / 2)))
            grad[:, j] += 0.5 * (np.asarray(plus) - np.asarray(minus))
    return p, grad


def output_gradient(kind: str, params, features) -> tuple[np.ndarray, np.ndarray]:
    """Exact P(B) and d P(B) / d params for any model kind."""
    if is_quantum(kind):
        return qnn_output_gradient(circuit_for(kind), params, features)
    return ann_output_gradient(kind, params, features)


def _check_params(kind: str, params) -> np.ndarray:
    w = np.asarray(params, dtype=float)
    if w.shape != (n_params(kind),):
        raise ConfigurationError(f"{kind} takes {n_params(kind)} parameters, got shape {w.shape}")
    return w


def _depolarized(p, circuit: ParameterizedCircuit, strength: float):
    keep = (1.0 - strength) ** len(circuit.gates)
    return keep * p + (1.0 - keep) * 0.5


def expected_probability(kind: str, params, features, backend: Backend = EXACT) -> np.ndarray:
    """Infinite-shot P(B) for each row of ``features`` under ``backend``'s noise model."""
    w = _check_params(kind, params)
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if not is_quantum(kind):
        if backend.name != "exact":
            raise ConfigurationError(f"{kind} only runs on the exact backend")
        return ann2_forward(w, x) if kind == "ANN2" else ann6_forward(w, x)
    circuit = circuit_for(kind)
    if backend.name == "photonic":
        noise = replace(backend.noise, phase_sigma=0.0)
        return _odd_fraction(accepted_outcome_probabilities(compile_circuit_to_photonics(circuit, x, w), noise))
    p = class_probability(run_circuit(circuit, x, w))
    if backend.name == "gate_noise":
        p = _depolarized(p, circuit, backend.depolarizing)
    return np.asarray(p)


def _odd_fraction(probs: np.ndarray) -> np.ndarray:
    total = probs.sum(axis=-1)
    odd = probs[..., 1] + probs[..., 2]
    return np.where(total > 0, odd / np.where(total > 0, total, 1.0), 0.5)


def model_probability(kind: str, params, features, backend: Backend = EXACT, rng=None) -> np.ndarray:
    """P(B) per row as the backend reports it: exact, or a finite-shot estimate."""
    w = _check_params(kind, params)
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if not is_quantum(kind) or backend.name == "exact":
        return expected_probability(kind, w, x, backend)
    rng = np.random.default_rng(rng)
    circuit = circuit_for(kind)
    if backend.name == "photonic":
        frac, _ = sample_accepted_parity(compile_circuit_to_photonics(circuit, x, w), backend.noise, backend.shots, rng)
        return np.asarray(frac)
    p = class_probability(run_circuit(circuit, x, w))
    if backend.name == "gate_noise":
        p = _depolarized(p, circuit, backend.depolarizing)
    return rng.binomial(backend.shots, np.clip(p, 0.0, 1.0)) / backend.shots


@dataclass
class ModelSpec:
    kind: str
    params: np.ndarray
    backend: Backend = field(default_factory=Backend)

    def __post_init__(self):
        self.params = _check_params(self.kind, self.params)
        if not is_quantum(self.kind) and self.backend.name != "exact":
            raise ConfigurationError(f"{self.kind} only runs on the exact backend")

    @property
    def n_params(self) -> int:
        return n_params(self.kind)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params.tolist(), "backend": self.backend.to_dict()}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> ModelSpec:
        return cls(doc["kind"], np.asarray(doc["params"], dtype=float), Backend.from_dict(doc.get("backend", {})))

    @classmethod
    def from_json(cls, text: str) -> ModelSpec:
        return cls.from_dict(json.loads(text))


def predict(model: ModelSpec, features, rng_seed=None) -> float:
    """P(class B) for one feature pair."""
    x = np.asarray(features, dtype=float)
    if x.shape != (2,):
        raise ConfigurationError(f"predict takes one feature pair, got shape {x.shape}")
    return float(model_probability(model.kind, model.params, x[None, :], model.backend, rng_seed)[0])


def labels_from_probability(p, threshold: float = 0.5) -> np.ndarray:
    """Class B (1) where P(B) >= threshold, ties included."""
    return (np.asarray(p) >= threshold).astype(int)


def decision(model: ModelSpec, features, threshold: float = 0.5, rng_seed=None) -> int:
    return int(labels_from_probability(predict(model, features, rng_seed), threshold))


def accuracy(p, labels, threshold: float = 0.5) -> float:
    return float(np.mean(labels_from_probability(p, threshold) == np.asarray(labels)))


def init_params(kind: str, rng) -> np.ndarray:
    """Angles uniform on [0, 2 pi) for circuits, weights uniform on [-1, 1] for networks."""
    rng = np.random.default_rng(rng)
    d = n_params(kind)
    if is_quantum(kind):
        return rng.uniform(0.0, 2 * pi, d)
    return rng.uniform(-1.0, 1.0, d)
