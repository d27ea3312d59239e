# %% [markdown]
# # Checking the mapping classes on samples
#
# Class membership is a statement about all pairs and all powers, so sampling
# can only support or refute it.  Every report here is labelled empirical.

# %%
import numpy as np

from retract_iter import Interval, PhiSpec, SampleSpec, SummableSequence, paper_pair, registry_get
from retract_iter import certify as cert
from retract_iter.mappings import expression_mapping, identity_on, metric_projection

K = Interval(-1.0, 1.0)
samples = SampleSpec(2000, 12345, K)
pair = paper_pair()

# %% [markdown]
# Ratio estimates k_n = max ||(PT)^n x - (PT)^n y|| / ||x - y|| for both maps.

# %%
for name, m in (("T1", pair.t1), ("T2", pair.t2)):
    rep = cert.estimate_kn(m, pair.p, samples, 10)
    print(name, np.round(rep.per_n, 6), "|", rep.notes[0])

# %% [markdown]
# The total inequality with zero perturbations passes for the example maps and
# fails for the clamped doubling map, whose violation on interior pairs is the
# pair distance itself.

# %%
zero = SummableSequence.zero()
for label, m, p in (("T1", pair.t1, pair.p),
                    ("2x clamped", registry_get("affine", A=[[2.0]]), metric_projection(K))):
    rep = cert.check_total(m, p, zero, zero, PhiSpec(), samples, 3)
    print(f"{label:>11}: verdict={'pass' if rep.verdict else 'fail'}  margins={np.round(rep.per_n, 4)}")

# %% [markdown]
# Retractions: clamping is idempotent, nonexpansive and sunny.  The identity
# leaves exterior points outside K.

# %%
for label, p in (("clamp", metric_projection(K)), ("identity", identity_on(K))):
    rep = cert.check_retraction(p, SampleSpec(500, 1, K))
    print(label, {r.label: f"{r.value:.2e}" for r in rep.rows})

# %% [markdown]
# Condition (A') with f(t) = t/4 and F = {0}, and the fixed-point transfer
# check.  x + 1 on [0, 1] is the standard counterexample: clamping creates a
# fixed point at 1 that T itself does not have, and T is not weakly inward there.

# %%
print(cert.check_condition_aprime(pair, PhiSpec.linear(0.25), [[0.0]], samples).rows[0])
unit = Interval(0.0, 1.0)
shift = expression_mapping(["x + 1"], unit)
print(cert.check_fixed_transfer(shift, metric_projection(unit), [[1.0]])[0])
print(cert.check_weakly_inward_1d(shift))
