# %% [markdown]
# # Reading a trace
#
# The distance to a common fixed point p obeys
# a_{n+1} <= (1 + b_n) a_n + c_n with summable b_n and c_n.  For maps that
# are plainly nonexpansive the perturbations vanish and the distances never grow.

# %%
import numpy as np

from retract_iter import RunConfig, StepSequence, SummableSequence, PhiSpec, paper_pair, run_scheme
from retract_iter.diagnostics import (bn_cn_sequences, cauchy_tail, compute_bn_cn, rate_estimate,
                                      residual_decay, verify_recursive_bound)
from retract_iter.mappings import MappingPair, expression_mapping, identity_on
from retract_iter.space import Interval

pair = paper_pair()
cfg = RunConfig("paper_b", StepSequence.constant(0.2), StepSequence.constant(0.2), np.array([-0.7]),
                max_iter=300, early_stop=False)
trace = run_scheme(cfg, pair, reference_p=[0.0])
a = trace.column("dist_p")

mu = SummableSequence.inverse_power(1.0, 2.0)
b, c = bn_cn_sequences(mu, mu, 2.0, 1.0, PhiSpec(), len(a) - 1)
report = verify_recursive_bound(a, b, c)
print("violations:", report.violations, " sum b =", round(report.tail_sum_b, 4), " sum c =", round(report.tail_sum_c, 4))
print("b_1, c_1 =", compute_bn_cn(mu, mu, 2.0, 1.0, PhiSpec(), 1))

# %% [markdown]
# Residual decay compares the first and last windows of max(r1, r2).

# %%
print(residual_decay(trace, 50, 1e-6))

# %% [markdown]
# A slowly converging pair (both maps sin x, fixed point 0) shows the Cauchy
# tail shrinking as the stopping tolerance tightens, and a step-size fit that
# is close to 1.

# %%
K = Interval(-1.0, 1.0)
s = expression_mapping(["sin(x)"], K)
slow = MappingPair(s, s, identity_on(K))
for tol in (1e-4, 1e-6, 1e-8):
    tr = run_scheme(RunConfig("paper_b", StepSequence.constant(0.5), StepSequence.constant(0.5),
                              np.array([1.0]), max_iter=5000, residual_tol=tol), slow)
    print(f"tol={tol:.0e}: {len(tr):4d} steps, cauchy tail (m=10) = {cauchy_tail(tr, 10):.3e}")
print(rate_estimate(tr))
