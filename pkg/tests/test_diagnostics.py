import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from retract_iter.certify import PhiSpec
from retract_iter.diagnostics import (bn_cn_sequences, cauchy_tail, compute_bn_cn, distance_to_set,
                                      rate_estimate, residual_decay, verify_recursive_bound)
from retract_iter.errors import InvalidInputError
from retract_iter.iterate import IterTrace, RunConfig, StepSequence, SummableSequence, TraceRow, run_scheme
from retract_iter.mappings import MappingPair, expression_mapping, identity_on, metric_projection, registry_get
from retract_iter.space import MAX, Interval

K = Interval(-1.0, 1.0)
HALF = StepSequence.constant(0.5)
ZERO = SummableSequence.zero()
IDPHI = PhiSpec("identity")


def table(values):
    return SummableSequence("table", values=tuple(values), tail_bound=float(sum(values)) + 1.0)


def run(pair, x1=1.0, scheme="paper_b", **kw):
    return run_scheme(RunConfig(scheme, HALF, HALF, np.array([x1]), **kw), pair, reference_p=[0.0])


def constant_trace(value=0.3, rows=30):
    x = np.array([value])
    return IterTrace("paper_b", [TraceRow(n, x, x, 0.0, 0.0, step_delta=0.0) for n in range(1, rows + 1)])


# -- coefficients ------------------------------------------------------------

def test_bn_cn_examples():
    assert compute_bn_cn(ZERO, ZERO, 3.0, 2.0, IDPHI, 5) == (0.0, 0.0)
    b, c = compute_bn_cn(table([0.1]), ZERO, 1.0, 1.0, IDPHI, 1)
    assert b == pytest.approx(0.21, abs=1e-15) and c == pytest.approx(0.11, abs=1e-15)
    assert compute_bn_cn(ZERO, table([0.5]), 1.0, 1.0, IDPHI, 1) == (0.0, 0.5)


def test_cross_term_counts_m_star_twice():
    # mu = lambda = 1, M = 1, phi = identity: c = M* + M*^2 + 1 + 1
    _, c = compute_bn_cn(table([1.0]), table([1.0]), 1.0, 3.0, IDPHI, 1)
    assert c == 3.0 + 9.0 + 1.0 + 1.0


def test_bn_cn_rejects_nonpositive_constants():
    with pytest.raises(InvalidInputError):
        compute_bn_cn(ZERO, ZERO, 0.0, 1.0, IDPHI, 1)


@pytest.mark.parametrize("mu,lam", [
    (SummableSequence.inverse_power(1, 2), SummableSequence.inverse_power(1, 2)),
    (SummableSequence.geometric(1, 0.5), SummableSequence.inverse_power(2, 1.5)),
])
def test_bn_cn_are_summable(mu, lam):
    m_const, m_star = 2.0, 1.0
    b, c = bn_cn_sequences(mu, lam, m_const, m_star, IDPHI, 10 ** 5)
    assert np.all(b >= 0) and np.all(c >= 0)
    # term-wise bounds: mu_n <= mu_1, so both series are dominated by the declared totals
    mb, lb, m1 = mu.total_bound(), lam.total_bound(), mu(1)
    assert b.sum() <= (2 * m_star + m_star ** 2 * m1) * mb
    assert c.sum() <= (m_const * m_star * m1 + m_const) * mb + (m_star ** 2 * m1 + 1) * lb


# -- recursive bound ---------------------------------------------------------

def test_recursive_bound_examples():
    rep = verify_recursive_bound([1.0, 3.0], [0.0], [0.0])
    assert not rep.verdict and rep.violations == [(1, 3.0, 1.0)]
    rep = verify_recursive_bound([1.0] * 20, np.zeros(20), np.zeros(20))
    assert rep.verdict and rep.limit_estimate == 1.0 and rep.violations == []


def test_recursive_bound_on_example_run(pair):
    tr = run(pair, max_iter=100, early_stop=False)
    a = tr.column("dist_p")
    b, c = bn_cn_sequences(ZERO, ZERO, 2.0, 1.0, IDPHI, len(a))
    rep = verify_recursive_bound(a, b, c)
    assert rep.verdict and rep.tail_sum_b == rep.tail_sum_c == 0.0


def test_recursive_bound_validation():
    with pytest.raises(InvalidInputError):
        verify_recursive_bound([1.0], [], [])
    with pytest.raises(InvalidInputError):
        verify_recursive_bound([1.0, 0.5], [-0.1], [0.0])
    with pytest.raises(InvalidInputError):
        verify_recursive_bound([1.0, 0.5, 0.2], [0.0], [0.0])


@settings(max_examples=200)
@given(a=st.lists(st.floats(0, 10), min_size=2, max_size=40))
def test_zero_perturbation_means_monotone(a):
    rep = verify_recursive_bound(a, np.zeros(len(a) - 1), np.zeros(len(a) - 1), tol=0.0)
    assert rep.verdict == all(a[k + 1] <= a[k] for k in range(len(a) - 1))
    assert [v[0] for v in rep.violations] == sorted(v[0] for v in rep.violations)


# -- residual decay ----------------------------------------------------------

def test_residual_decay_on_example(pair):
    tr = run(pair, max_iter=500, early_stop=False)
    rep = residual_decay(tr, 50, 1e-6)
    assert rep.verdict and rep.tail_max < 1e-6 < rep.head_max
    assert "weakly inward" in rep.note


def test_residual_decay_trivial_for_zero_residuals():
    assert residual_decay(constant_trace(), 10, 1e-6).verdict


def test_residual_decay_fails_without_convergence():
    # opposite shifts have no common fixed point; the residuals never vanish
    up, down = registry_get("affine", b=[0.5]), registry_get("affine", b=[-0.5])
    tr = run(MappingPair(up, down, metric_projection(K)), x1=0.3, max_iter=200, early_stop=False)
    rep = residual_decay(tr, 50, 1e-6)
    assert not rep.verdict and rep.tail_max > 1e-6


def test_residual_decay_needs_enough_rows():
    with pytest.raises(InvalidInputError):
        residual_decay(constant_trace(rows=19), 10, 1e-6)


# -- Cauchy tail, distances --------------------------------------------------

def test_cauchy_tail_examples(pair):
    tr = run(pair, max_iter=500, early_stop=False)
    assert cauchy_tail(tr, 10) <= 2e-8
    assert cauchy_tail(constant_trace(), 7) == 0.0
    with pytest.raises(InvalidInputError):
        cauchy_tail(constant_trace(rows=12), 12)


def test_cauchy_tail_shrinks_with_tolerance():
    # sin converges slowly to 0, so every tolerance leaves a visible tail
    m = expression_mapping(["sin(x)"], K)
    pair = MappingPair(m, m, identity_on(K))
    tails = [cauchy_tail(run(pair, max_iter=5000, residual_tol=tol), 10) for tol in (1e-4, 1e-6, 1e-8)]
    assert tails[0] > tails[1] > tails[2] > 0


def test_distance_to_set_examples():
    assert distance_to_set([0.5], [[0.0]]) == 0.5
    assert distance_to_set([0.5], [[0.0], [0.5]]) == 0.0
    assert distance_to_set([-1.0], [[0.0], [1.0]]) == 1.0
    assert distance_to_set([1.0, 3.0], [[0.0, 0.0]], MAX) == 3.0
    with pytest.raises(InvalidInputError):
        distance_to_set([0.0], [])


@given(x=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=4))
def test_distance_to_own_singleton(x):
    assert distance_to_set(x, [x]) == 0.0


# -- rate --------------------------------------------------------------------

def test_rate_of_halving_sequence():
    zero = registry_get("affine", A=[[0.0]])
    tr = run(MappingPair(zero, zero, identity_on(K)), scheme="mann", max_iter=60, early_stop=False)
    rep = rate_estimate(tr)
    assert rep.model == "linear"
    assert rep.rho == pytest.approx(0.5, abs=0.01)


def test_rate_of_constant_trace_is_undefined():
    with pytest.raises(InvalidInputError):
        rate_estimate(constant_trace())


def test_rate_on_example_is_finite(pair):
    rep = rate_estimate(run(pair, max_iter=500, early_stop=False))
    assert np.isfinite(rep.fit_residual)


def test_erratic_steps_are_not_linear():
    x = np.array([0.0])
    deltas = [10.0 ** -(1 + (n % 3) * 4) for n in range(1, 61)]
    tr = IterTrace("mann", [TraceRow(n, x, None, 1.0, 1.0, step_delta=d) for n, d in enumerate(deltas, 1)])
    rep = rate_estimate(tr)
    assert rep.model == "sublinear" and rep.rho is None and rep.fit_residual > 0.1


def test_growing_steps_are_not_linear():
    x = np.array([0.0])
    tr = IterTrace("mann", [TraceRow(n, x, None, 1.0, 1.0, step_delta=1.1 ** n) for n in range(1, 31)])
    rep = rate_estimate(tr)
    assert rep.model == "sublinear" and rep.slope > 0
