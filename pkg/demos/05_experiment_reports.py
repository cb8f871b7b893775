# coding: utf-8

# # Repeated trials and reports
#
# The harness runs seeded trials, aggregates mean, std and a 95% interval per
# iteration, and writes CSV tables plus SVG plots. Reruns with the same master
# seed produce identical bytes.

# In[1]:

import tempfile
from pathlib import Path

from photonic_qnn.harness import ExperimentConfig, run_experiment
from photonic_qnn.training import TrainConfig

out = Path(tempfile.mkdtemp(prefix="pqnn-"))


# In[2]:

cfg = ExperimentConfig("xor_compare", trials=5, seed=0, train=TrainConfig(max_iterations=100), out=str(out))
report = run_experiment(cfg)
for name, res in report.series.items():
    s = res.stats
    print(f"{name}: loss {float(s.final_loss.mean):.3f} +- {float(s.final_loss.ci95):.3f}, "
          f"accuracy {float(s.final_accuracy.mean):.2f} (n={s.n})")


# In[3]:

for f in report.files:
    print(f.relative_to(out), f.stat().st_size, "bytes")


# # Hardware that is not here
#
# The remote backend goes through submit, poll and collect, then reports the
# job as unsupported. The trial is dropped and logged; the run still finishes.

# In[4]:

stub = run_experiment(ExperimentConfig("xor_compare", models=("QNN2",), trials=2, backend="remote-stub", out=str(out)))
print(stub.series["QNN2"].failures)
print(stub.jobs)
