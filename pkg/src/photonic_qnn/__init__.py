"""Desk-scale simulation of small photonic and classical binary classifiers.

Submodules
----------
statevector  gate-level two-qubit simulator, angle encoding, parity readout
photonics    dual-rail linear optics: permanents, postselected CNOT, noise, shot sampling
models       QNN2 / QNN6 / ANN2 / ANN6 behind one prediction interface
training     cross-entropy loss, Adam, COBYLA and the hybrid training loop
effdim       Fisher information and normalized effective dimension
data         XOR clusters and the Versicolor/Virginica Iris subset
harness      repeated trials, statistics, CSV/SVG reports and the CLI backend
"""
from .data import Dataset, gen_xor, load_iris, shuffle_split_order
from .effdim import EDConfig, effective_dimension, fisher_at, normalized_ed
from .errors import CapabilityError, ConfigurationError, IngestionError
from .models import Backend, ModelSpec, decision, predict
from .photonics import NoiseParams, build_postselected_cnot, compile_circuit_to_photonics, net_shot_rate, sample_shots
from .statevector import class_probability, qnn2_circuit, qnn6_circuit, run_circuit
from .training import Adam, Cobyla, TrainConfig, train

__version__ = "0.1.0"
