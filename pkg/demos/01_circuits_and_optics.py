# coding: utf-8

# # Two simulators for the same circuit
#
# The gate-level statevector simulator and the linear-optics simulator should
# agree on every postselected distribution. This walkthrough builds the QNN2
# circuit, compiles it to beamsplitters and phase shifters, and compares.

# In[1]:

import numpy as np

from photonic_qnn.photonics import (
    NoiseParams,
    beam_splitter,
    build_postselected_cnot,
    compile_circuit_to_photonics,
    compile_interferometer,
    fock_evolve,
    postselected_distributions,
    sample_shots,
)
from photonic_qnn.statevector import class_probability, qnn2_circuit, run_circuit


# # Hong-Ou-Mandel
#
# Two identical photons on a 50:50 beamsplitter never leave through different ports.

# In[2]:

u = compile_interferometer([beam_splitter(0, 1)], 2)
for occ, amp in sorted(fock_evolve(u, (1, 1)).items()):
    print(occ, round(abs(amp) ** 2, 12))


# # The postselected CNOT
#
# Six modes: control rails (0, 1), target rails (2, 3) and two vacuum ancillas.
# Every logical input maps to its CNOT image with amplitude 1/3, so a run
# succeeds one time in nine.

# In[3]:

pc = build_postselected_cnot()
u = pc.unitary()
for bits in ("00", "01", "10", "11"):
    out = fock_evolve(u, pc.logical_pattern(bits))
    image = max(pc.logical_outcomes(), key=lambda b: abs(out.get(pc.logical_pattern(b), 0)))
    print(bits, "->", image, "amplitude", round(abs(out[pc.logical_pattern(image)]), 12))


# In[4]:

batch = sample_shots(pc, NoiseParams.ideal(), 90_000, rng_seed=1)
print("accepted", batch.accepted, "of", batch.requested, "expected about", 90_000 // 9)


# # QNN2 on both simulators

# In[5]:

circuit = qnn2_circuit()
rng = np.random.default_rng(0)
x = rng.uniform(0, 1, (5, 2))
w = rng.uniform(0, 2 * np.pi, (5, 2))

gate = np.abs(run_circuit(circuit, x, w)) ** 2
quantum, _ = postselected_distributions(compile_circuit_to_photonics(circuit, x, w))
optics = quantum / quantum.sum(axis=-1, keepdims=True)

print(np.round(gate, 4))
print("largest gap", np.abs(gate - optics).max())


# The class probability is the odd-parity mass P(01) + P(10).

# In[6]:

print(np.round(class_probability(run_circuit(circuit, x, w)), 4))
