# coding: utf-8

# # XOR with two parameters
#
# Four Gaussian clusters on the unit square, labelled by XOR of the corner.
# The two-parameter circuit separates them; a single logistic neuron with two
# weights cannot, since no line does.

# In[1]:

import numpy as np

from photonic_qnn.data import gen_xor
from photonic_qnn.training import Adam, TrainConfig, train

data = gen_xor(n_per_cluster=16, sigma=0.05, seed=1)
print(len(data), "points, class counts", data.class_counts())


# # COBYLA, one short trust-region cycle per update

# In[2]:

cfg = TrainConfig(max_iterations=200, seed=3)
qnn = train("QNN2", data, cfg)
ann = train("ANN2", data, cfg)

for it in (0, 10, 50, 100, 200):
    print(f"{it:4d}  QNN2 {qnn.loss[it]:.3f} / {qnn.accuracy[it]:.2f}   ANN2 {ann.loss[it]:.3f} / {ann.accuracy[it]:.2f}")


# The converged figure is the mean of the last five records.

# In[3]:

print("QNN2", qnn.converged())
print("ANN2", ann.converged())
print("learned angles", np.round(qnn.final_params, 3))


# # Same circuit, Adam with parameter-shift gradients

# In[4]:

adam = train("QNN2", data, TrainConfig(optimizer=Adam(lr=0.05), max_iterations=200, seed=3))
print("Adam QNN2", adam.converged())
