"""Acceptance criteria 1-9.

Each ``criterion_N`` raises AssertionError on failure.  Under pytest every
criterion is one test and the terminal summary prints one PASS/FAIL line per
criterion; ``python3 tests/test_acceptance.py`` prints the same lines directly.
"""

import contextlib
import io
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracle  # noqa: E402
from retract_iter import certify as cert  # noqa: E402
from retract_iter.cli.main import main  # noqa: E402
from retract_iter.diagnostics import bn_cn_sequences, residual_decay, verify_recursive_bound  # noqa: E402
from retract_iter.iterate import RunConfig, StepSequence, SummableSequence, run_scheme  # noqa: E402
from retract_iter.mapexpr import ParseError, parse, to_source  # noqa: E402
from retract_iter.mappings import (MappingPair, expression_mapping, identity_on,  # noqa: E402
                                   metric_projection, paper_pair, registry_get)
from retract_iter.space import Ball, Interval  # noqa: E402

K = Interval(-1.0, 1.0)
HALF = StepSequence.constant(0.5)
ZERO = SummableSequence.zero()
IDPHI = cert.PhiSpec("identity")
STARTS = np.random.default_rng(20240601).uniform(-1.0, 1.0, 20)

TITLES = {
    1: "example converges; 20 seeded starts; oracle agreement to 1e-12",
    2: "residuals vanish over 500 steps (tail max < 1e-6, decay pass)",
    3: "distance obeys the perturbed recursion (zero and 1/n^2 perturbations)",
    4: "certification of the example maps and of the doubling map",
    5: "projections onto [-1,1] and the unit disc are sunny/nonexpansive retractions",
    6: "fixed-point transfer and its weak-inwardness witness",
    7: "degenerate-case equivalences hold exactly",
    8: "CSV outputs are bitwise deterministic",
    9: "parser corpus round-trips and reports error kinds/positions",
}


def example_cfg(x1, **kw):
    return RunConfig("paper_b", HALF, HALF, np.array([x1]), **kw)


def criterion_1():
    pair = paper_pair()
    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as d:
        assert main(["demo", "--out", d]) == 0
    tr = run_scheme(example_cfg(1.0, max_iter=500, residual_tol=1e-8), pair)
    elapsed = time.perf_counter() - start
    assert tr.terminal == "tol-reached" and abs(tr.final[0]) < 1e-8 and len(tr) <= 200
    assert elapsed < 5.0, f"demo took {elapsed:.2f}s"
    for x1 in STARTS:
        t = run_scheme(example_cfg(float(x1), max_iter=200), pair)
        assert t.terminal == "tol-reached" and abs(t.final[0]) < 1e-8, f"start {x1} did not converge"
    for x1 in [1.0, *STARTS]:
        t = run_scheme(example_cfg(float(x1), max_iter=50, early_stop=False), pair)
        ref = oracle.example_iterates(float(x1), 0.5, 0.5, 49)
        err = np.max(np.abs(t.xs[:, 0] - np.array(ref)))
        assert err <= 1e-12, f"oracle mismatch {err} from x1={x1}"


def criterion_2():
    tr = run_scheme(example_cfg(1.0, max_iter=500, early_stop=False), paper_pair())
    assert len(tr) == 500
    r = np.maximum(tr.column("r1"), tr.column("r2"))
    assert np.max(r[-50:]) < 1e-6
    assert residual_decay(tr, 50, 1e-6).verdict


def criterion_3():
    pair = paper_pair()
    mu = SummableSequence.inverse_power(1.0, 2.0)
    for x1 in [1.0, *STARTS]:
        tr = run_scheme(example_cfg(float(x1), max_iter=200, early_stop=False), pair, reference_p=[0.0])
        a = tr.column("dist_p")
        assert np.all(a[1:] <= a[:-1] + 1e-9)
        b, c = bn_cn_sequences(ZERO, ZERO, K.diameter(), 1.0, IDPHI, len(a) - 1)
        rep = verify_recursive_bound(a, b, c)
        assert rep.verdict and not rep.violations
        b, c = bn_cn_sequences(mu, mu, K.diameter(), 1.0, IDPHI, len(a) - 1)
        assert verify_recursive_bound(a, b, c).verdict


def criterion_4():
    start = time.perf_counter()
    s = cert.SampleSpec(2000, 12345, K)
    ident = identity_on(K)
    for name in ("paper_t1", "paper_t2"):
        m = registry_get(name)
        kn = cert.estimate_kn(m, ident, s, 10)
        assert len(kn.per_n) == 10 and np.all(kn.per_n <= 1 + 1e-9), f"{name}: {kn.per_n}"
        assert cert.check_total(m, ident, ZERO, ZERO, IDPHI, s, 10).verdict
    double = cert.check_total(registry_get("affine", A=[[2.0]]), metric_projection(K), ZERO, ZERO, IDPHI, s, 1)
    assert not double.verdict and double.rows[0].value >= 0.5
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"certification took {elapsed:.2f}s"


def criterion_5():
    rep = cert.check_retraction(metric_projection(K), cert.SampleSpec(500, 1, K))
    for label in ("idempotence", "nonexpansive", "sunny"):
        assert rep.row(label).value <= 1e-12, label
    disc = Ball([0.0, 0.0], 1.0)
    rep = cert.check_retraction(metric_projection(disc), cert.SampleSpec(500, 2, disc))
    for label in ("idempotence", "nonexpansive"):
        assert rep.row(label).value <= 1e-12, label


def criterion_6():
    (row,) = cert.check_fixed_transfer(registry_get("paper_t1"), identity_on(K), [[0.0]])
    assert row.pt_residual < 1e-12 and row.t_residual < 1e-12 and row.agree
    (row,) = cert.check_fixed_transfer(registry_get("paper_t2"), identity_on(K), [[0.0]])
    assert row.pt_residual < 1e-12 and row.t_residual < 1e-12 and row.agree
    unit = Interval(0.0, 1.0)
    shift = expression_mapping(["x + 1"], unit)
    (row,) = cert.check_fixed_transfer(shift, metric_projection(unit), [[1.0]], tol=1e-10)
    assert row.in_fix_pt and not row.in_fix_t and not row.agree
    assert not cert.check_weakly_inward_1d(shift).passed


def criterion_7():
    t1 = registry_get("paper_t1")
    same = MappingPair(t1, t1, identity_on(K))
    tr = run_scheme(example_cfg(0.9, max_iter=100, early_stop=False), same)
    assert all(r.power_gap == 0.0 for r in tr.rows)

    zero_beta = RunConfig("paper_b", HALF, StepSequence.table([0.0] * 100), np.array([0.7]),
                          max_iter=100, early_stop=False)
    tr = run_scheme(zero_beta, paper_pair())
    assert all(np.array_equal(r.y, r.x) for r in tr.rows)

    ident = registry_get("identity")
    still = MappingPair(ident, ident, identity_on(K))
    for scheme in ("paper_b", "mann", "ishikawa"):
        tr = run_scheme(RunConfig(scheme, HALF, HALF, np.array([0.3]), max_iter=50, early_stop=False), still)
        assert all(r.x[0] == 0.3 for r in tr.rows) and all(r.step_delta == 0.0 for r in tr.rows)


_CONFIG = """
domain: {kind: interval, lo: -1, hi: 1}
mappings:
  t1: {builtin: paper_t1}
  t2: {expr: ["x >= 0 ? x : -x"]}
  retraction: {kind: projection}
  fixed_points: [[0.0]]
scheme: %s
certify: {enabled: true, samples: 500, n_max: 6}
"""


def criterion_8():
    single = "{kind: paper_b, x1: 0.9, max_iter: 120, early_stop: false}"
    many = "[{kind: paper_b, x1: 0.9}, {kind: mann, x1: 0.9}, {kind: ishikawa, x1: 0.9}]"
    with tempfile.TemporaryDirectory() as d:
        root = Path(d)
        (root / "one.yaml").write_text(_CONFIG % single)
        (root / "many.yaml").write_text(_CONFIG % many)
        jobs = [["run", str(root / "one.yaml")], ["certify", str(root / "one.yaml")],
                ["compare", str(root / "many.yaml")], ["demo"]]
        for k, args in enumerate(jobs):
            outs = [root / f"{k}_{rep}" for rep in "ab"]
            for out in outs:
                assert main(args + ["--out", str(out)]) == 0, args
            csvs = sorted(p.name for p in outs[0].glob("*.csv"))
            assert csvs, args
            for name in csvs:
                assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), (args, name)


def criterion_9():
    from test_mapexpr import INVALID, VALID
    assert len(VALID) + len(INVALID) >= 30
    sources = {src for src, *_ in VALID}
    assert "x >= 0 ? -2*sin(x/2) : 2*sin(x/2)" in sources and "x >= 0 ? x : -x" in sources
    for src, dim, *_ in VALID:
        e = parse(src, dim)
        assert parse(to_source(e), dim) == e, src
    for src, dim, kind, pos in INVALID:
        with pytest.raises(ParseError) as info:
            parse(src, dim)
        assert (info.value.kind, info.value.position) == (kind, pos), src


CRITERIA = {n: globals()[f"criterion_{n}"] for n in TITLES}


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n}")
def test_criterion(number):
    CRITERIA[number]()


if __name__ == "__main__":
    failed = 0
    for number in sorted(CRITERIA):
        try:
            with contextlib.redirect_stdout(io.StringIO()):
                CRITERIA[number]()
            status, why = "PASS", ""
        except Exception as exc:  # report and keep going
            status, why = "FAIL", f"  ({type(exc).__name__}: {exc})"
            failed += 1
        print(f"criterion {number}: {status}  {TITLES[number]}{why}")
    sys.exit(1 if failed else 0)
