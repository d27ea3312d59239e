import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from retract_iter.diagnostics import bn_cn_sequences, verify_recursive_bound
from retract_iter.certify import PhiSpec
from retract_iter.errors import InvalidInputError, NumericalError
from retract_iter.iterate import (RunConfig, StepSequence, SummableSequence, compare_schemes,
                                  run_scheme, seq_value)
from retract_iter.mappings import MappingPair, identity_on, metric_projection, paper_pair, registry_get
from retract_iter.space import Ball, Interval

K = Interval(-1.0, 1.0)
HALF = StepSequence.constant(0.5)


def cfg(scheme="paper_b", x1=(1.0,), alpha=HALF, beta=HALF, **kw):
    return RunConfig(scheme, alpha, beta, np.array(x1), **kw)


# -- sequences ---------------------------------------------------------------

def test_seq_value_examples():
    assert seq_value(StepSequence.constant(0.5), 7) == 0.5
    assert seq_value(SummableSequence.inverse_power(1, 2), 2) == 0.25
    assert seq_value(StepSequence.clipped_harmonic(eps=0.1, scale=1), 100) == 0.1
    assert seq_value(StepSequence.clipped_harmonic(eps=0.1, scale=1), 1) == 0.9
    assert seq_value(SummableSequence.geometric(2, 0.5), 3) == 0.25
    assert seq_value(SummableSequence.zero(), 9) == 0.0


def test_table_sequences():
    s = StepSequence.table([0.0, 1.0, 0.5])
    assert [s(n) for n in (1, 2, 3)] == [0.0, 1.0, 0.5]
    with pytest.raises(InvalidInputError):
        s(4)
    t = SummableSequence("table", values=(0.5, 0.25), tail_bound=1.0)
    assert t(2) == 0.25 and t.total_bound() == 1.0
    with pytest.raises(InvalidInputError):
        SummableSequence("table", values=(0.5, 0.25))


@pytest.mark.parametrize("bad", [
    lambda: StepSequence.constant(1.2),
    lambda: StepSequence("constant", c=0.5, eps=0.6),
    lambda: StepSequence.table([1.5]),
    lambda: SummableSequence.inverse_power(1, 1),
    lambda: SummableSequence.geometric(1, 1.0),
    lambda: seq_value(HALF, 0),
])
def test_sequence_validation(bad):
    with pytest.raises(InvalidInputError):
        bad()


@settings(max_examples=100)
@given(eps=st.floats(0.001, 0.499), scale=st.floats(0.01, 100), n=st.integers(1, 10**6))
def test_clipped_harmonic_stays_in_band(eps, scale, n):
    v = StepSequence.clipped_harmonic(eps, scale)(n)
    assert eps <= v <= 1 - eps


@pytest.mark.parametrize("seq", [SummableSequence.inverse_power(1.0, 2.0), SummableSequence.inverse_power(3.0, 1.5),
                                 SummableSequence.geometric(1.0, 0.9)])
def test_partial_sums_bounded_by_total(seq):
    n = np.arange(1, 10**6 + 1, dtype=np.float64)
    terms = seq.c / n ** seq.p if seq.kind == "inverse_power" else seq.c * seq.r ** n
    assert terms.sum() <= seq.total_bound()


# -- run_scheme --------------------------------------------------------------

def test_example_run_reaches_tolerance(pair):
    tr = run_scheme(cfg(), pair)
    assert tr.terminal == "tol-reached"
    assert len(tr) <= 200
    assert abs(tr.final[0]) < 1e-8
    last = tr.rows[-1]
    assert max(last.r1, last.r2) <= 1e-8
    assert last.step_delta is None


def test_example_first_steps(pair):
    tr = run_scheme(cfg(), pair)
    y1 = tr.rows[0].y[0]
    assert y1 == 0.5 * 1.0 + 0.5 * (-2 * math.sin(0.5))
    assert y1 == pytest.approx(0.020574461395797, abs=1e-12)
    x2 = tr.rows[1].x[0]
    assert x2 == oracle.example_iterates(1.0, 0.5, 0.5, 1)[1]
    assert 0 < x2 < 1e-6


def test_engine_matches_oracle_without_stopping(pair):
    tr = run_scheme(cfg(max_iter=50, early_stop=False), pair)
    ref = oracle.example_iterates(1.0, 0.5, 0.5, 49)
    assert len(tr) == 50 and tr.terminal == "max-iter"
    for row, want in zip(tr.rows, ref):
        assert abs(row.x[0] - want) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(x1=st.floats(-1, 1), a=st.floats(0.05, 0.95), b=st.floats(0.05, 0.95))
def test_engine_matches_oracle_for_any_weights(x1, a, b):
    pair = paper_pair()
    tr = run_scheme(cfg(x1=(x1,), alpha=StepSequence.constant(a), beta=StepSequence.constant(b),
                        max_iter=30, early_stop=False), pair)
    ref = oracle.example_iterates(x1, a, b, 29)
    assert np.max(np.abs(tr.xs[:, 0] - np.array(ref))) <= 1e-12


def test_identity_pair_is_stationary():
    ident = registry_get("identity")
    pair = MappingPair(ident, ident, identity_on(K))
    # residuals vanish at once, so the tolerance rule fires first
    tr = run_scheme(cfg(x1=(0.3,)), pair)
    assert tr.terminal == "tol-reached" and len(tr) == 1
    for scheme in ("paper_b", "mann", "ishikawa"):
        tr = run_scheme(cfg(scheme, x1=(0.3,), max_iter=40, early_stop=False), pair)
        assert all(r.x[0] == 0.3 for r in tr.rows)
        assert all(r.step_delta == 0.0 for r in tr.rows)


def test_stagnation_rule():
    # PT1 and PT2 disagree at every point, so the residuals never both vanish,
    # while alpha = 1/2 balances them to a fixed x
    a = registry_get("affine", A=[[1.0]], b=[0.5])
    b = registry_get("affine", A=[[1.0]], b=[-0.5])
    pair = MappingPair(a, b, metric_projection(K))
    tr = run_scheme(cfg(x1=(0.0,), beta=StepSequence.table([0.0] * 100), max_iter=100), pair)
    assert tr.terminal == "stagnation"
    assert len(tr) == 10


def test_mann_halving_closed_form():
    half = registry_get("affine", A=[[0.5]])
    pair = MappingPair(half, half, identity_on(K))
    ones = StepSequence.table([1.0] * 10)
    tr = run_scheme(cfg("mann", alpha=ones, beta=ones, max_iter=4, early_stop=False), pair)
    assert [r.x[0] for r in tr.rows] == [1.0, 0.5, 1 / 8, 1 / 64]


def test_equal_maps_give_zero_power_gap():
    t1 = registry_get("paper_t1")
    pair = MappingPair(t1, t1, identity_on(K))
    tr = run_scheme(cfg(x1=(0.9,), max_iter=60, early_stop=False), pair)
    gaps = [r.power_gap for r in tr.rows]
    assert all(g == 0.0 for g in gaps)


def test_zero_beta_copies_x():
    tr = run_scheme(cfg(x1=(0.6,), beta=StepSequence.table([0.0] * 30), max_iter=30, early_stop=False), paper_pair())
    assert all(np.array_equal(r.y, r.x) for r in tr.rows)


def test_mann_and_ishikawa_reach_tolerance(pair):
    for scheme in ("mann", "ishikawa"):
        tr = run_scheme(cfg(scheme), pair)
        assert tr.terminal == "tol-reached"
        assert abs(tr.final[0]) < 1e-8
    assert run_scheme(cfg("mann"), pair).rows[0].y is None


def test_power_gap_only_for_two_map_scheme(pair):
    assert run_scheme(cfg("ishikawa"), pair).rows[0].power_gap is None
    assert run_scheme(cfg(), pair).rows[0].power_gap is not None
    assert run_scheme(cfg(record_power_gap=False), pair).rows[0].power_gap is None


def test_reference_distance(pair):
    tr = run_scheme(cfg(), pair, reference_p=[0.0])
    assert [r.dist_p for r in tr.rows] == [abs(r.x[0]) for r in tr.rows]
    assert run_scheme(cfg(), pair).rows[0].dist_p is None


def test_iterates_stay_feasible(pair):
    for x1 in np.linspace(-1, 1, 9):
        tr = run_scheme(cfg(x1=(x1,), max_iter=40, early_stop=False), pair)
        for r in tr.rows:
            assert K.contains(r.x, 1e-9) and K.contains(r.y, 1e-9)


def test_ball_domain_run():
    ball = Ball([0.0, 0.0], 1.0)
    rot = registry_get("affine", A=[[0.0, -0.9], [0.9, 0.0]], domain=ball)
    shrink = registry_get("affine", A=[[0.5]], domain=ball)
    pair = MappingPair(rot, shrink, metric_projection(ball))
    tr = run_scheme(cfg(x1=(0.6, 0.0)), pair, reference_p=[0.0, 0.0])
    assert tr.terminal == "tol-reached"
    assert np.linalg.norm(tr.final) < 1e-7


def test_bad_inputs(pair):
    with pytest.raises(InvalidInputError):
        run_scheme(cfg(x1=(2.0,)), pair)
    with pytest.raises(InvalidInputError):
        run_scheme(cfg(x1=(0.0, 0.0)), pair)
    with pytest.raises(InvalidInputError):
        cfg("newton")
    with pytest.raises(InvalidInputError):
        cfg(max_iter=0)
    with pytest.raises(InvalidInputError):
        cfg(residual_tol=0.0)


def test_blowup_carries_step():
    line = Interval(-math.inf, math.inf)
    double = registry_get("affine", A=[[2.0]], domain=line)
    pair = MappingPair(double, double, identity_on(line))
    with pytest.raises(NumericalError) as info:
        run_scheme(cfg(x1=(1.0,), max_iter=100), pair)
    assert info.value.n is not None and info.value.n > 1


def test_determinism(pair):
    a = run_scheme(cfg(x1=(0.37,), max_iter=80, early_stop=False), pair)
    b = run_scheme(cfg(x1=(0.37,), max_iter=80, early_stop=False), pair)
    assert [(r.x.tobytes(), r.y.tobytes(), r.r1, r.r2, r.power_gap, r.step_delta) for r in a.rows] == \
           [(r.x.tobytes(), r.y.tobytes(), r.r1, r.r2, r.power_gap, r.step_delta) for r in b.rows]


def test_distance_obeys_perturbed_recursion(pair):
    for x1 in (-1.0, -0.4, 0.2, 1.0):
        tr = run_scheme(cfg(x1=(x1,), max_iter=60, early_stop=False), pair, reference_p=[0.0])
        a = tr.column("dist_p")
        zero = SummableSequence.zero()
        b, c = bn_cn_sequences(zero, zero, 2.0, 1.0, PhiSpec("identity"), len(a) - 1)
        assert verify_recursive_bound(a, b, c).verdict
        mu = SummableSequence.inverse_power(1, 2)
        b, c = bn_cn_sequences(mu, mu, 2.0, 1.0, PhiSpec("identity"), len(a) - 1)
        assert verify_recursive_bound(a, b, c).verdict


# -- compare_schemes ---------------------------------------------------------

def test_compare_empty(pair):
    assert compare_schemes([], pair) == []


def test_compare_isolates_failures(pair):
    out = compare_schemes([cfg(), cfg("mann", x1=(2.0,)), cfg("ishikawa")], pair)
    assert [o.config.scheme for o in out] == ["paper_b", "mann", "ishikawa"]
    assert out[0].ok and out[2].ok
    assert isinstance(out[1].error, InvalidInputError) and out[1].trace is None
    assert out[0].trace.terminal == out[2].trace.terminal == "tol-reached"


def test_compare_two_step_vs_mann(pair):
    out = compare_schemes([cfg(), cfg("mann")], pair)
    counts = [len(o.trace) for o in out]
    assert all(o.trace.terminal == "tol-reached" for o in out)
    assert counts[0] == len(oracle_stop(0.5, 0.5))


def oracle_stop(a, b, tol=1e-8):
    xs = oracle.example_iterates(1.0, a, b, 200)
    out = []
    for x in xs:
        out.append(x)
        r = max(abs(x - oracle.t1(x)), abs(x - oracle.t2(x)))
        if r <= tol:
            break
    return out
