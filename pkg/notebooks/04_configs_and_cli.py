# %% [markdown]
# # Declaring experiments in YAML
#
# Mappings can be written as expressions.  The grammar has arithmetic, the
# usual one-argument functions, min/max/clamp, comparisons and a C-style
# conditional, which is enough for piecewise maps.

# %%
import tempfile
from pathlib import Path

from retract_iter import ParseError, parse, to_source
from retract_iter.cli.main import main

e = parse("x >= 0 ? -2*sin(x/2) : 2*sin(x/2)")
print(to_source(e))
try:
    parse("clamp(x, 1)")
except ParseError as exc:
    print(exc.kind, "at", exc.position)

# %% [markdown]
# A config with three scheme blocks is run by `compare`, which writes one
# trace per scheme and a summary.  `validate` re-reads any of the CSV files.

# %%
config = """
domain: {kind: ball, center: [0, 0], radius: 1}
space: {dim: 2}
mappings:
  t1: {expr: ["0.9*x1", "-0.9*x0"]}
  t2: {builtin: affine, params: {A: [[0.5, 0.0], [0.0, 0.5]]}}
  retraction: {kind: projection}
  fixed_points: [[0, 0]]
scheme:
  - {kind: paper_b, x1: [0.6, 0.3]}
  - {kind: mann, x1: [0.6, 0.3]}
  - {kind: ishikawa, x1: [0.6, 0.3]}
certify: {enabled: true, samples: 400, n_max: 4}
"""
out = Path(tempfile.mkdtemp())
path = out / "rotation.yaml"
path.write_text(config)
print("compare exit code:", main(["compare", str(path), "--out", str(out)]))
print((out / "summary.csv").read_text())
print("certify exit code:", main(["certify", str(path), "--strict", "--out", str(out)]))
print("validate exit code:", main(["validate", str(out / "summary.csv")]))
