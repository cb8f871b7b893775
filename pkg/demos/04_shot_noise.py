# coding: utf-8

# # Training through a noisy photonic chip
#
# Every loss evaluation now comes from a finite number of accepted detections,
# after loss, partial distinguishability and the 1/9 gate success have thinned
# the pulse train.

# In[1]:

import numpy as np

from photonic_qnn.data import load_iris
from photonic_qnn.models import Backend, expected_probability, model_probability
from photonic_qnn.photonics import NoiseParams, net_shot_rate
from photonic_qnn.training import TrainConfig, train

noise = NoiseParams()
print(noise)
print(f"net accepted rate {net_shot_rate(80e6, 0.022, 1 / 9):.0f} Hz")


# # Shot noise on one prediction

# In[2]:

w = np.array([0.4, 1.1, 0.0, 2.0, 0.7, 0.0])
x = np.array([[0.6, 0.5]])
exact = expected_probability("QNN6", w, x, Backend("photonic", shots=10, noise=noise))[0]
for shots in (10, 100, 1000, 10**5):
    draws = [model_probability("QNN6", w, x, Backend("photonic", shots=shots, noise=noise), s)[0] for s in range(200)]
    print(f"{shots:>6}  mean {np.mean(draws):.3f}  spread {np.std(draws):.3f}  (noisy expectation {exact:.3f})")


# # Training at a few shot budgets

# In[3]:

iris = load_iris()
for shots in (10, 100, 1000):
    tr = train("QNN6", iris, TrainConfig(max_iterations=200, seed=5, backend=Backend("photonic", shots=shots)))
    loss, acc = tr.converged()
    print(f"{shots:>5} shots  loss {loss:.3f}  accuracy {acc:.2f}")
