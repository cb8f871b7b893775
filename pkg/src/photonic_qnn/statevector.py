"""Gate-level statevector simulation of small parameterized qubit circuits.

States are complex numpy arrays whose last axis holds the ``2**n`` basis
amplitudes; any leading axes are batch axes, so a whole dataset (or a stack
of parameter-shifted weight vectors) is pushed through a circuit in one pass.
Qubit 0 is the most significant bit of the basis index.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .errors import ConfigurationError

ROTATIONS = ("rx", "ry", "rz")
GATE_KINDS = ROTATIONS + ("cnot",)
MAX_QUBITS = 6

#: Encoding multiplier used by the shipped QNN circuits: one full turn per unit feature.
DEFAULT_ENCODING_SCALE = 2 * pi


@dataclass(frozen=True)
class Gate:
    """One circuit instruction.

    ``slot`` names the angle source of a rotation: ``"x<i>"`` for the i-th
    data feature, ``"w<j>"`` for the j-th trainable weight.
    """

    kind: str
    target: int
    control: int | None = None
    slot: str | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in GATE_KINDS:
            raise ConfigurationError(f"unsupported gate kind {self.kind!r}")
        if kind == "cnot":
            if self.control is None:
                raise ConfigurationError("cnot needs a control qubit")
            if self.control == self.target:
                raise ConfigurationError("cnot control and target must differ")
            if self.slot is not None:
                raise ConfigurationError("cnot takes no angle slot")
        else:
            if self.control is not None:
                raise ConfigurationError(f"{kind} takes no control qubit")
            if self.slot is None:
                raise ConfigurationError(f"{kind} needs an angle slot")
            _parse_slot(self.slot)

    @property
    def is_rotation(self) -> bool:
        return self.kind in ROTATIONS

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "target": self.target}
        if self.control is not None:
            out["control"] = self.control
        if self.slot is not None:
            out["slot"] = self.slot
        return out


def _parse_slot(slot: str) -> tuple[str, int]:
    if len(slot) < 2 or slot[0] not in "xw" or not slot[1:].isdigit():
        raise ConfigurationError(f"malformed angle slot {slot!r}; expected x<i> or w<j>")
    return slot[0], int(slot[1:])


@dataclass(frozen=True)
class ParameterizedCircuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    encoding_slots: int
    weight_slots: int
    encoding_scale: float = DEFAULT_ENCODING_SCALE
    name: str = field(default="circuit", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        for g in self.gates:
            for q in (g.target, g.control):
                if q is not None and not 0 <= q < self.n_qubits:
                    raise ConfigurationError(f"qubit index {q} out of range for {self.n_qubits} qubits")
            if g.slot is not None:
                src, idx = _parse_slot(g.slot)
                bound = self.encoding_slots if src == "x" else self.weight_slots
                if idx >= bound:
                    raise ConfigurationError(f"slot {g.slot} exceeds declared slot count {bound}")

    def weight_occurrences(self, j: int) -> list[int]:
        """Gate indices whose angle is trainable weight ``j``."""
        return [i for i, g in enumerate(self.gates) if g.slot == f"w{j}"]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "encoding_slots": self.encoding_slots,
            "weight_slots": self.weight_slots,
            "encoding_scale": self.encoding_scale,
            "gates": [g.to_dict() for g in self.gates],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> ParameterizedCircuit:
        try:
            gates = tuple(Gate(**g) for g in doc["gates"])
            return cls(
                n_qubits=int(doc["n_qubits"]),
                gates=gates,
                encoding_slots=int(doc["encoding_slots"]),
                weight_slots=int(doc["weight_slots"]),
                encoding_scale=float(doc.get("encoding_scale", DEFAULT_ENCODING_SCALE)),
                name=doc.get("name", "circuit"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"invalid circuit document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> ParameterizedCircuit:
        return cls.from_dict(json.loads(text))


def qnn2_circuit(encoding_scale: float = DEFAULT_ENCODING_SCALE) -> ParameterizedCircuit:
    """Two-weight classifier: Rx encodings, one CNOT, one Ry weight per qubit."""
    gates = (
        Gate("rx", 0, slot="x0"),
        Gate("rx", 1, slot="x1"),
        Gate("cnot", 1, control=0),
        Gate("ry", 0, slot="w0"),
        Gate("ry", 1, slot="w1"),
    )
    return ParameterizedCircuit(2, gates, 2, 2, encoding_scale, name="QNN2")


def qnn6_circuit(encoding_scale: float = DEFAULT_ENCODING_SCALE) -> ParameterizedCircuit:
    """Six-weight classifier: three Euler angles per qubit split around the CNOT."""
    gates = (
        Gate("rx", 0, slot="x0"),
        Gate("rx", 1, slot="x1"),
        Gate("rz", 0, slot="w0"),
        Gate("ry", 0, slot="w1"),
        Gate("rz", 1, slot="w3"),
        Gate("ry", 1, slot="w4"),
        Gate("cnot", 1, control=0),
        Gate("rz", 0, slot="w2"),
        Gate("rz", 1, slot="w5"),
    )
    return ParameterizedCircuit(2, gates, 2, 6, encoding_scale, name="QNN6")


def rotation_matrix(kind: str, angle) -> np.ndarray:
    """Rotation unitaries ``exp(-i angle P / 2)``; batched angles give shape ``(..., 2, 2)``."""
    half = 0.5 * np.asarray(angle, dtype=float)
    c, s = np.cos(half), np.sin(half)
    out = np.zeros(half.shape + (2, 2), dtype=complex)
    if kind == "rx":
        out[..., 0, 0] = c
        out[..., 1, 1] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
    elif kind == "ry":
        out[..., 0, 0] = c
        out[..., 1, 1] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
    elif kind == "rz":
        out[..., 0, 0] = np.exp(-1j * half)
        out[..., 1, 1] = np.exp(1j * half)
    else:
        raise ConfigurationError(f"{kind!r} is not a rotation")
    return out


def n_qubits_of(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n or n < 1:
        raise ConfigurationError(f"state dimension {dim} is not a power of two")
    return n


def zero_state(n_qubits: int, batch_shape: tuple = ()) -> np.ndarray:
    state = np.zeros(tuple(batch_shape) + (1 << n_qubits,), dtype=complex)
    state[..., 0] = 1.0
    return state


def basis_state(bits: str) -> np.ndarray:
    """Computational basis state from a bitstring, qubit 0 first (``"10"`` is |10>)."""
    state = np.zeros(1 << len(bits), dtype=complex)
    state[int(bits, 2)] = 1.0
    return state


def _cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def _apply_1q(state: np.ndarray, matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    batch = np.broadcast_shapes(state.shape[:-1], matrix.shape[:-2])
    state = np.broadcast_to(state, batch + state.shape[-1:])
    s = state.reshape(batch + (1 << qubit, 2, 1 << (n - qubit - 1)))
    m = matrix[..., None, None]
    s0, s1 = s[..., 0, :], s[..., 1, :]
    out = np.empty_like(s)
    out[..., 0, :] = m[..., 0, 0, :, :] * s0 + m[..., 0, 1, :, :] * s1
    out[..., 1, :] = m[..., 1, 0, :, :] * s0 + m[..., 1, 1, :, :] * s1
    return out.reshape(batch + (1 << n,))


def apply_gate(state: np.ndarray, gate: Gate, angle=None) -> np.ndarray:
    """Apply one gate; ``angle`` (radians, scalar or batch array) is required iff it is a rotation."""
    state = np.asarray(state, dtype=complex)
    n = n_qubits_of(state)
    if gate.is_rotation:
        if angle is None:
            raise ConfigurationError(f"{gate.kind} gate needs an angle")
        return _apply_1q(state, rotation_matrix(gate.kind, angle), gate.target, n)
    if angle is not None:
        raise ConfigurationError("cnot takes no angle")
    if max(gate.control, gate.target) >= n:
        raise ConfigurationError("gate qubit index exceeds state size")
    return state[..., _cnot_permutation(n, gate.control, gate.target)]


def _gate_angles(circuit: ParameterizedCircuit, features: np.ndarray, weights: np.ndarray):
    for g in circuit.gates:
        if g.slot is None:
            yield g, None
            continue
        src, idx = _parse_slot(g.slot)
        if src == "x":
            yield g, circuit.encoding_scale * features[..., idx]
        else:
            yield g, weights[..., idx]


def run_circuit(circuit: ParameterizedCircuit, features, weights, shift: tuple[int, float] | None = None) -> np.ndarray:
    """Evolve |0...0> through ``circuit`` with features and weights bound to its slots.

    ``features`` has shape ``(..., encoding_slots)`` and ``weights`` shape
    ``(..., weight_slots)``; leading axes broadcast. ``shift=(gate_index, delta)``
    offsets a single gate's angle, which is how parameter-shift gradients
    address one occurrence of a weight.
    """
    features = np.asarray(features, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if features.shape[-1:] != (circuit.encoding_slots,):
        raise ConfigurationError(f"expected {circuit.encoding_slots} features, got shape {features.shape}")
    if weights.shape[-1:] != (circuit.weight_slots,) and not (circuit.weight_slots == 0 and weights.size == 0):
        raise ConfigurationError(f"expected {circuit.weight_slots} weights, got shape {weights.shape}")
    if features.size and (features.min() < -1e-12 or features.max() > 1 + 1e-12):
        raise ConfigurationError("features must lie in [0, 1]")
    batch = np.broadcast_shapes(features.shape[:-1], weights.shape[:-1])
    state = zero_state(circuit.n_qubits, batch)
    for i, (g, angle) in enumerate(_gate_angles(circuit, features, weights)):
        if shift is not None and shift[0] == i:
            angle = angle + shift[1]
        state = apply_gate(state, g, angle)
    return state


def circuit_unitary(circuit: ParameterizedCircuit, features, weights) -> np.ndarray:
    """Dense unitary of a bound circuit, built column by column from basis inputs."""
    dim = 1 << circuit.n_qubits
    features = np.asarray(features, dtype=float)
    weights = np.asarray(weights, dtype=float)
    state = np.eye(dim, dtype=complex)
    for g, angle in _gate_angles(circuit, features, weights):
        state = apply_gate(state, g, angle)
    return state.T


def _odd_parity_mask(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return np.array([bin(i).count("1") % 2 == 1 for i in idx])


def probabilities(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def class_probability(state: np.ndarray) -> np.ndarray | float:
    """P(class B): total probability of odd-parity basis outcomes (|01> and |10> for two qubits)."""
    state = np.asarray(state)
    p = probabilities(state)[..., _odd_parity_mask(n_qubits_of(state))].sum(axis=-1)
    return float(p) if np.ndim(p) == 0 else p


def sampled_class_probability(state: np.ndarray, shots: int, rng_seed=None):
    """Fraction of odd-parity outcomes in ``shots`` projective measurements.

    The odd-parity count of i.i.d. basis measurements is binomial in the exact
    parity probability, so it is drawn directly. ``rng_seed`` is an int or a
    ``numpy.random.Generator``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(rng_seed)
    p = np.clip(class_probability(state), 0.0, 1.0)
    counts = rng.binomial(shots, p)
    out = counts / shots
    return float(out) if np.ndim(out) == 0 else out
