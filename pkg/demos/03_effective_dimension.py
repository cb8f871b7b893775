# coding: utf-8

# # Effective dimension
#
# Sample parameter vectors, average the Fisher information over inputs,
# normalize its trace and read off how many directions the model can resolve
# with n samples. Dividing by the parameter count puts every model on [0, 1].

# In[1]:

import numpy as np

from photonic_qnn.effdim import EDConfig, ed_convergence_curve, effective_dimension, fisher_at, normalized_ed


# In[2]:

cfg = EDConfig(n=1e6, n_theta=100, n_data=100, seed=0)
for kind, d in (("QNN2", 2), ("ANN2", 2), ("QNN6", 6), ("ANN6", 6)):
    print(kind, round(normalized_ed(effective_dimension(kind, cfg), d), 3))


# Two of QNN6's weights are trailing Z rotations. They commute with the parity
# readout, so their Fisher rows vanish and they never count.

# In[3]:

est = fisher_at("QNN6", np.linspace(0.3, 5.0, 6), 200, seed=1)
print(np.round(est.matrix, 4))


# # How the estimate moves with n

# In[4]:

for n, ed in ed_convergence_curve("QNN2", [1e3, 1e4, 1e5, 1e6], cfg):
    print(f"n = {n:>9.0f}  normalized ED {normalized_ed(ed, 2):.3f}")


# The input distribution matters. Uniform inputs on the square instead of the Iris points:

# In[5]:

uni = EDConfig(seed=0, inputs="uniform")
print("ANN2 uniform", round(normalized_ed(effective_dimension("ANN2", uni), 2), 3))
