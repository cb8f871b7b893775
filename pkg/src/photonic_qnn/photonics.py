"""Dual-rail linear-optical emulation of the qubit circuits.

Qubit ``q`` lives on the rail pair ``(2q, 2q + 1)``: a photon in the upper
rail is |0>, in the lower rail |1>. Single-qubit rotations compile to
beamsplitter/phase-shifter blocks on a rail pair; the CNOT is the
postselected three-beamsplitter construction with two vacuum ancilla modes,
which succeeds with amplitude 1/3 on every computational input.

Transfer matrices follow ``U[out, in]``, and multi-photon amplitudes are
permanents of submatrices of ``U``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from math import factorial, pi, sqrt

import numpy as np

from .errors import CapabilityError, ConfigurationError
from .statevector import ParameterizedCircuit, _gate_angles

MAX_MODES = 12
MAX_PHOTONS = 3
MAX_PERMANENT = 6

BEAM_SPLITTER = "bs"
PHASE_SHIFTER = "ps"


@dataclass(frozen=True)
class OpticalElement:
    """A beamsplitter on two modes or a phase shifter on one.

    ``value`` is the reflectivity (beamsplitter) or phase in radians (phase
    shifter). It may be an array, in which case the element is a batch of
    elements and compiles to a batch of transfer matrices.
    """

    kind: str
    modes: tuple[int, ...]
    value: object

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        if self.kind == BEAM_SPLITTER:
            if len(self.modes) != 2 or self.modes[0] == self.modes[1]:
                raise ConfigurationError("beamsplitter needs two distinct modes")
            r = np.asarray(self.value, dtype=float)
            if np.any(r < 0) or np.any(r > 1):
                raise ConfigurationError("reflectivity must lie in [0, 1]")
        elif self.kind == PHASE_SHIFTER:
            if len(self.modes) != 1:
                raise ConfigurationError("phase shifter acts on one mode")
        else:
            raise ConfigurationError(f"unknown optical element {self.kind!r}")

    def to_dict(self) -> dict:
        value = np.asarray(self.value)
        return {
            "kind": self.kind,
            "modes": list(self.modes),
            "value": value.tolist() if value.ndim else float(value),
        }


def beam_splitter(m0: int, m1: int, reflectivity: float = 0.5) -> OpticalElement:
    return OpticalElement(BEAM_SPLITTER, (m0, m1), reflectivity)


def phase_shifter(mode: int, phase) -> OpticalElement:
    return OpticalElement(PHASE_SHIFTER, (mode,), phase)


@dataclass(frozen=True)
class NoiseParams:
    """Source and chip imperfections; defaults are the Ascella figures.

    ``g2`` is carried for reporting only. ``brightness`` enters throughput
    accounting, never the postselected statistics.
    """

    brightness: float = 0.55
    indistinguishability: float = 0.86
    g2: float = 0.00183
    transmittance: float = 0.022
    phase_sigma: float = 0.001

    def __post_init__(self):
        for name in ("brightness", "indistinguishability", "g2", "transmittance"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")
        if self.phase_sigma < 0:
            raise ConfigurationError("phase_sigma must be non-negative")

    @classmethod
    def ideal(cls) -> NoiseParams:
        return cls(brightness=1.0, indistinguishability=1.0, g2=0.0, transmittance=1.0, phase_sigma=0.0)


# -- permanents ---------------------------------------------------------------


def permanent(matrix) -> complex:
    """Permanent by Ryser's formula with Gray-code subset updates, O(2^k k)."""
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    k = a.shape[0]
    if k == 0:
        return 1.0
    if k > MAX_PERMANENT:
        raise CapabilityError(f"permanent limited to k <= {MAX_PERMANENT}")
    rowsums = np.zeros(k, dtype=np.result_type(a.dtype, complex))
    total = 0.0
    gray = 0
    for i in range(1, 1 << k):
        new = i ^ (i >> 1)
        col = (new ^ gray).bit_length() - 1
        if new & (1 << col):
            rowsums += a[:, col]
        else:
            rowsums -= a[:, col]
        gray = new
        sign = -1 if bin(new).count("1") % 2 else 1
        total += sign * np.prod(rowsums)
    total *= (-1) ** k
    return complex(total)


def batch_permanent(a: np.ndarray) -> np.ndarray:
    """Permanents of a stack ``(..., k, k)``; same formula, subsets enumerated directly."""
    a = np.asarray(a)
    k = a.shape[-1]
    if k == 0:
        return np.ones(a.shape[:-2], dtype=complex)
    if k == 1:
        return a[..., 0, 0]
    if k == 2:
        return a[..., 0, 0] * a[..., 1, 1] + a[..., 0, 1] * a[..., 1, 0]
    total = np.zeros(a.shape[:-2], dtype=np.result_type(a.dtype, complex))
    for mask in range(1, 1 << k):
        cols = [j for j in range(k) if mask >> j & 1]
        term = a[..., :, cols].sum(axis=-1).prod(axis=-1)
        total += term if len(cols) % 2 == k % 2 else -term
    return total


# -- interferometers ----------------------------------------------------------


def element_matrix(element: OpticalElement, m: int) -> np.ndarray:
    """Embedded ``m x m`` transfer matrix (batched if the element's value is)."""
    value = np.asarray(element.value, dtype=float)
    out = np.zeros(value.shape + (m, m), dtype=complex)
    out[..., range(m), range(m)] = 1.0
    if element.kind == BEAM_SPLITTER:
        a, b = element.modes
        t, r = np.sqrt(1.0 - value), np.sqrt(value)
        out[..., a, a] = t
        out[..., a, b] = r
        out[..., b, a] = r
        out[..., b, b] = -t
    else:
        (a,) = element.modes
        out[..., a, a] = np.exp(1j * value)
    return out


def _apply_element(u: np.ndarray, element: OpticalElement) -> np.ndarray:
    value = np.asarray(element.value, dtype=float)
    batch = np.broadcast_shapes(u.shape[:-2], value.shape)
    u = np.array(np.broadcast_to(u, batch + u.shape[-2:]))
    v = value[..., None]
    if element.kind == BEAM_SPLITTER:
        a, b = element.modes
        t, r = np.sqrt(1.0 - v), np.sqrt(v)
        ra, rb = u[..., a, :].copy(), u[..., b, :].copy()
        u[..., a, :] = t * ra + r * rb
        u[..., b, :] = r * ra - t * rb
    else:
        (a,) = element.modes
        u[..., a, :] *= np.exp(1j * v)
    return u


def compile_interferometer(elements, m: int, phase_noise_rng=None, phase_sigma: float = 0.0) -> np.ndarray:
    """Transfer matrix of ``elements`` applied in order (first element acts first).

    When ``phase_noise_rng`` is given, every phase shifter is perturbed by an
    independent Gaussian draw with standard deviation ``phase_sigma``.
    """
    if m > MAX_MODES:
        raise CapabilityError(f"at most {MAX_MODES} modes supported")
    rng = None if phase_noise_rng is None else np.random.default_rng(phase_noise_rng)
    u = np.eye(m, dtype=complex)
    for el in elements:
        if max(el.modes) >= m:
            raise ConfigurationError(f"element on modes {el.modes} outside {m}-mode chip")
        if rng is not None and el.kind == PHASE_SHIFTER and phase_sigma > 0:
            val = np.asarray(el.value, dtype=float)
            el = OpticalElement(PHASE_SHIFTER, el.modes, val + rng.normal(0.0, phase_sigma, size=val.shape))
        u = _apply_element(u, el)
    return u


def is_unitary(u: np.ndarray, atol: float = 1e-9) -> bool:
    eye = np.eye(u.shape[-1])
    return bool(np.allclose(u @ np.conj(np.swapaxes(u, -1, -2)), eye, atol=atol))


# -- Fock-space evolution -----------------------------------------------------


def fock_states(n_photons: int, m: int) -> list[tuple[int, ...]]:
    """All occupation patterns of ``n_photons`` over ``m`` modes, in lexicographic order."""
    states = []
    for combo in itertools.combinations_with_replacement(range(m), n_photons):
        occ = [0] * m
        for mode in combo:
            occ[mode] += 1
        states.append(tuple(occ))
    return sorted(set(states), reverse=True)


def _mode_list(occ) -> list[int]:
    return [mode for mode, n in enumerate(occ) for _ in range(n)]


def _occupation_norm(occ) -> float:
    out = 1.0
    for n in occ:
        out *= factorial(n)
    return out


def transition_amplitude(u: np.ndarray, inp, out) -> np.ndarray:
    rows, cols = _mode_list(out), _mode_list(inp)
    sub = u[..., rows, :][..., :, cols]
    return batch_permanent(sub) / sqrt(_occupation_norm(inp) * _occupation_norm(out))


def fock_evolve(u: np.ndarray, input_state) -> dict[tuple[int, ...], np.ndarray]:
    """Output amplitudes for indistinguishable photons entering ``u`` in ``input_state``.

    Returns a map from every output occupation pattern with the same photon
    number to its amplitude (a scalar, or an array over ``u``'s batch axes).
    """
    inp = tuple(int(n) for n in input_state)
    m = u.shape[-1]
    if len(inp) != m:
        raise ConfigurationError(f"input state has {len(inp)} modes, interferometer {m}")
    n = sum(inp)
    if n > MAX_PHOTONS:
        raise CapabilityError(f"at most {MAX_PHOTONS} photons supported, got {n}")
    return {out: transition_amplitude(u, inp, out) for out in fock_states(n, m)}


def distinguishable_probabilities(u: np.ndarray, input_state) -> dict[tuple[int, ...], np.ndarray]:
    """Output distribution when every photon propagates independently through ``u``."""
    inp = tuple(int(n) for n in input_state)
    m = u.shape[-1]
    n = sum(inp)
    if n > MAX_PHOTONS:
        raise CapabilityError(f"at most {MAX_PHOTONS} photons supported, got {n}")
    w = np.abs(u) ** 2
    cols = _mode_list(inp)
    out = {}
    for occ in fock_states(n, m):
        sub = w[..., _mode_list(occ), :][..., :, cols]
        out[occ] = np.real(batch_permanent(sub)) / (_occupation_norm(occ) * _occupation_norm(inp))
    return out


# -- compiled dual-rail circuits ----------------------------------------------


@dataclass(frozen=True)
class PhotonicCircuit:
    """Element list plus the bookkeeping needed to read qubits back out.

    Postselection keeps events with exactly one photon in each qubit's rail
    pair; the logical bit of qubit ``q`` is then which rail of ``rails[q]``
    fired.
    """

    elements: tuple[OpticalElement, ...]
    n_modes: int
    rails: tuple[tuple[int, int], ...]
    ancillas: tuple[int, ...] = ()
    input_state: tuple[int, ...] = field(default=())
    heralded_gates: int = 0

    @property
    def n_qubits(self) -> int:
        return len(self.rails)

    def unitary(self, phase_noise_rng=None, phase_sigma: float = 0.0) -> np.ndarray:
        return compile_interferometer(self.elements, self.n_modes, phase_noise_rng, phase_sigma)

    def logical_pattern(self, bits: str) -> tuple[int, ...]:
        occ = [0] * self.n_modes
        for q, b in enumerate(bits):
            occ[self.rails[q][int(b)]] = 1
        return tuple(occ)

    def logical_outcomes(self) -> list[str]:
        return ["".join(b) for b in itertools.product("01", repeat=self.n_qubits)]

    def passes_postselection(self, occ) -> bool:
        return all(occ[u] + occ[l] == 1 for u, l in self.rails)

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "rails": [list(r) for r in self.rails],
            "ancillas": list(self.ancillas),
            "input_state": list(self.input_state),
            "elements": [el.to_dict() for el in self.elements],
            "postselection": {"rule": "one_photon_per_rail_pair", "rails": [list(r) for r in self.rails]},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> PhotonicCircuit:
        elements = tuple(OpticalElement(e["kind"], tuple(e["modes"]), np.asarray(e["value"], dtype=float)) for e in doc["elements"])
        return cls(
            elements=elements,
            n_modes=int(doc["n_modes"]),
            rails=tuple(tuple(r) for r in doc["rails"]),
            ancillas=tuple(doc.get("ancillas", ())),
            input_state=tuple(doc["input_state"]),
        )

    @classmethod
    def from_json(cls, text: str) -> PhotonicCircuit:
        return cls.from_dict(json.loads(text))


def rz_block(upper: int, lower: int, angle) -> list[OpticalElement]:
    """Rz(angle) up to global phase: diag(1, e^{i angle}) on the rail pair."""
    return [phase_shifter(lower, angle)]


def rx_block(upper: int, lower: int, angle) -> list[OpticalElement]:
    """Rx(angle) up to global phase: Hadamard-conjugated Rz."""
    return [beam_splitter(upper, lower, 0.5), phase_shifter(lower, angle), beam_splitter(upper, lower, 0.5)]


def ry_block(upper: int, lower: int, angle) -> list[OpticalElement]:
    """Ry(angle) up to global phase: Rz(pi/2) Rx(angle) Rz(-pi/2)."""
    return [phase_shifter(lower, -pi / 2), *rx_block(upper, lower, angle), phase_shifter(lower, pi / 2)]


_ROTATION_BLOCKS = {"rx": rx_block, "ry": ry_block, "rz": rz_block}


def cnot_block(control: tuple[int, int], target: tuple[int, int], ancillas: tuple[int, int]) -> list[OpticalElement]:
    """Postselected CNOT on rail pairs, amplitude 1/3 on success.

    The target is Hadamard-conjugated around a controlled-Z built from three
    1/3-reflectivity beamsplitters: one coupling the control's |1> rail to the
    target's |1> rail (two-photon interference gives -1/3) and one attenuating
    each remaining rail into a vacuum ancilla (1/sqrt(3) each). Full
    reflections (R = 1) route the reflected light back onto the logical rails.
    """
    (c0, c1), (t0, t1), (a0, a1) = control, target, ancillas
    third = 1.0 / 3.0
    return [
        beam_splitter(t0, t1, 0.5),
        beam_splitter(c1, t1, third),
        beam_splitter(c1, t1, 1.0),
        beam_splitter(c0, a0, third),
        beam_splitter(c0, a0, 1.0),
        beam_splitter(t0, a1, third),
        beam_splitter(t0, a1, 1.0),
        beam_splitter(t0, t1, 0.5),
    ]


def build_postselected_cnot() -> PhotonicCircuit:
    """Standalone 6-mode CNOT: control rails (0, 1), target rails (2, 3), ancillas 4 and 5."""
    rails = ((0, 1), (2, 3))
    return PhotonicCircuit(
        elements=tuple(cnot_block(rails[0], rails[1], (4, 5))),
        n_modes=6,
        rails=rails,
        ancillas=(4, 5),
        input_state=(1, 0, 1, 0, 0, 0),
        heralded_gates=1,
    )


def compile_circuit_to_photonics(circuit: ParameterizedCircuit, features, weights) -> PhotonicCircuit:
    """Dual-rail element list for a bound circuit.

    Batched features/weights yield batched element values. At most one CNOT is
    accepted: the postselected gate is not cascadable without heralding.
    """
    features = np.asarray(features, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = circuit.n_qubits
    if n > 2:
        raise CapabilityError("dual-rail compilation supports at most 2 qubits on a 12-mode chip")
    n_cnot = sum(g.kind == "cnot" for g in circuit.gates)
    if n_cnot > 1:
        raise CapabilityError("at most one postselected CNOT per circuit")
    rails = tuple((2 * q, 2 * q + 1) for q in range(n))
    ancillas = (2 * n, 2 * n + 1) if n_cnot else ()
    elements: list[OpticalElement] = []
    for g, angle in _gate_angles(circuit, features, weights):
        if g.kind == "cnot":
            elements += cnot_block(rails[g.control], rails[g.target], ancillas)
        elif g.kind in _ROTATION_BLOCKS:
            elements += _ROTATION_BLOCKS[g.kind](*rails[g.target], angle)
        else:
            raise CapabilityError(f"no photonic compilation for {g.kind}")
    n_modes = 2 * n + len(ancillas)
    input_state = [0] * n_modes
    for upper, _ in rails:
        input_state[upper] = 1
    return PhotonicCircuit(tuple(elements), n_modes, rails, ancillas, tuple(input_state), n_cnot)


def logical_amplitudes(pc: PhotonicCircuit, u: np.ndarray | None = None) -> np.ndarray:
    """Amplitudes of the postselected logical outcomes, shape ``(..., 2**n)``, unnormalized."""
    if u is None:
        u = pc.unitary()
    amps = [transition_amplitude(u, pc.input_state, pc.logical_pattern(b)) for b in pc.logical_outcomes()]
    return np.stack(np.broadcast_arrays(*amps), axis=-1)


def postselected_distributions(pc: PhotonicCircuit, u: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized probabilities of each logical outcome for interfering and distinguishable photons."""
    if u is None:
        u = pc.unitary()
    quantum = np.abs(logical_amplitudes(pc, u)) ** 2
    w = np.abs(u) ** 2
    cols = _mode_list(pc.input_state)
    dist = []
    for b in pc.logical_outcomes():
        sub = w[..., _mode_list(pc.logical_pattern(b)), :][..., :, cols]
        dist.append(np.real(batch_permanent(sub)))
    return quantum, np.stack(np.broadcast_arrays(*dist), axis=-1)


def accepted_outcome_probabilities(pc: PhotonicCircuit, noise: NoiseParams, rng=None) -> np.ndarray:
    """Per-shot probability of each accepted logical outcome, shape ``(..., 2**n)``.

    A shot is accepted only if every photon survives loss and the detection
    pattern passes postselection. Interference happens with probability equal
    to the indistinguishability, otherwise photons travel independently.
    Phases are jittered once per call when ``rng`` is supplied.
    """
    u = pc.unitary(rng if noise.phase_sigma > 0 else None, noise.phase_sigma)
    quantum, dist = postselected_distributions(pc, u)
    n_photons = sum(pc.input_state)
    survive = noise.transmittance ** n_photons
    mix = noise.indistinguishability * quantum + (1.0 - noise.indistinguishability) * dist
    return survive * mix


@dataclass
class ShotBatch:
    requested: int
    accepted: int
    outcome_counts: dict[str, int]

    def __post_init__(self):
        if self.accepted > self.requested:
            raise ValueError("accepted shots exceed requested shots")
        if sum(self.outcome_counts.values()) != self.accepted:
            raise ValueError("outcome counts do not sum to accepted shots")

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.requested if self.requested else 0.0

    def odd_parity_fraction(self) -> float:
        if not self.accepted:
            return float("nan")
        odd = sum(c for k, c in self.outcome_counts.items() if k.count("1") % 2)
        return odd / self.accepted

    def to_json(self, **kwargs) -> str:
        return json.dumps(asdict(self), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> ShotBatch:
        doc = json.loads(text)
        return cls(int(doc["requested"]), int(doc["accepted"]), {k: int(v) for k, v in doc["outcome_counts"].items()})


def sample_shots(pc: PhotonicCircuit, noise: NoiseParams, shots: int, rng_seed=None) -> ShotBatch:
    """Run ``shots`` source pulses through the noisy chip and keep postselected events.

    Shots are i.i.d., so the outcome histogram (including the rejected bin) is a
    single multinomial draw over the exact per-shot distribution; the result is
    a pure function of the seed.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(rng_seed)
    probs = np.asarray(accepted_outcome_probabilities(pc, noise, rng), dtype=float)
    if probs.ndim != 1:
        raise ConfigurationError("sample_shots takes a single (unbatched) compiled circuit")
    probs = np.clip(probs, 0.0, None)
    reject = max(0.0, 1.0 - probs.sum())
    counts = rng.multinomial(shots, np.append(probs, reject) / (probs.sum() + reject))
    keys = pc.logical_outcomes()
    outcome = {k: int(c) for k, c in zip(keys, counts[:-1])}
    return ShotBatch(requested=int(shots), accepted=int(counts[:-1].sum()), outcome_counts=outcome)


def sample_accepted_parity(pc: PhotonicCircuit, noise: NoiseParams, accepted: int, rng_seed=None):
    """Odd-parity fraction over ``accepted`` postselected detections, batched over the circuit.

    Only detected events count towards the shot budget, so the number of
    accepted events is fixed and the outcome is binomial in the conditional
    odd-parity probability. Also returns the requested-pulse count, drawn
    from the matching negative binomial.
    """
    if accepted < 1:
        raise ValueError("accepted shots must be >= 1")
    rng = np.random.default_rng(rng_seed)
    probs = accepted_outcome_probabilities(pc, noise, rng)
    p_acc = probs.sum(axis=-1)
    odd = np.array([k.count("1") % 2 == 1 for k in pc.logical_outcomes()])
    p_odd = np.where(p_acc > 0, probs[..., odd].sum(axis=-1) / np.where(p_acc > 0, p_acc, 1.0), 0.5)
    frac = rng.binomial(accepted, np.clip(p_odd, 0.0, 1.0)) / accepted
    requested = accepted + rng.negative_binomial(accepted, np.clip(p_acc, 1e-300, 1.0))
    return frac, requested


def net_shot_rate(rep_rate_hz: float, transmittance: float, gate_success: float, brightness_factor: float | None = None) -> float:
    """Accepted-event rate: repetition rate times end-to-end transmittance times gate success.

    Brightness is left out unless given explicitly.
    """
    if rep_rate_hz < 0:
        raise ValueError("repetition rate must be non-negative")
    for name, v in (("transmittance", transmittance), ("gate_success", gate_success)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    rate = rep_rate_hz * transmittance * gate_success
    if brightness_factor is not None:
        if not 0.0 <= brightness_factor <= 1.0:
            raise ValueError("brightness_factor must lie in [0, 1]")
        rate *= brightness_factor
    return rate


def gate_limited_shot_rate(gate_time_s: float, n_gates: int, overhead_s: float = 0.0) -> float:
    """Shot rate of a sequential gate-model device: one shot per ``n_gates`` gate times plus overhead.

    ``overhead_s`` covers readout, reset and control latency; it has no default
    beyond zero because its size is device specific.
    """
    if gate_time_s <= 0 or n_gates < 1 or overhead_s < 0:
        raise ValueError("gate_time_s > 0, n_gates >= 1 and overhead_s >= 0 required")
    return 1.0 / (n_gates * gate_time_s + overhead_s)
