"""Post-hoc checks on iteration traces.

These evaluate, on recorded data, the bounds that drive the convergence
argument for the two-mapping scheme: the perturbed recursion
``a_{n+1} <= (1 + b_n) a_n + c_n`` with summable ``b_n, c_n``, vanishing
one-step residuals, and a Cauchy tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .certify import PhiSpec
from .errors import InvalidInputError
from .iterate import IterTrace, SummableSequence, seq_value
from .space import EUCLIDEAN, NormSpec, as_vector, distance

__all__ = [
    "BoundCheckReport", "RateReport", "DecayReport",
    "compute_bn_cn", "bn_cn_sequences", "verify_recursive_bound", "residual_decay",
    "cauchy_tail", "distance_to_set", "rate_estimate",
]


@dataclass
class BoundCheckReport:
    violations: list = field(default_factory=list)  # (n, lhs, rhs), n 1-based
    tail_sum_b: float = 0.0
    tail_sum_c: float = 0.0
    limit_estimate: float = math.nan
    verdict: bool = True


@dataclass
class RateReport:
    model: str  # "linear" or "sublinear"
    rho: Optional[float]
    fit_residual: float
    slope: float
    points: int


@dataclass
class DecayReport:
    verdict: bool
    head_max: float
    tail_max: float
    threshold: float
    note: str = ("residuals are measured against PT_i; for weakly inward mappings the fixed "
                 "points of PT_i and T_i coincide, so vanishing PT_i residuals carry over to T_i")


def compute_bn_cn(mu: SummableSequence, lam: SummableSequence, m_const: float, m_star: float,
                  phi: PhiSpec, n: int) -> tuple[float, float]:
    """Coefficients of the perturbed recursion for the distance to a common fixed point.

    ``b_n = 2 mu_n M* + (mu_n M*)^2`` and
    ``c_n = phi(M) M* mu_n^2 + M* lambda_n mu_n M* + mu_n phi(M) + lambda_n``.
    The doubled ``M*`` in the cross term is kept as is; it only loosens the bound.
    """
    if not (m_const > 0 and m_star > 0):
        raise InvalidInputError("M and M* must be positive")
    mu_n, lam_n = seq_value(mu, n), seq_value(lam, n)
    phi_m = phi(m_const)
    b = 2.0 * mu_n * m_star + (mu_n * m_star) ** 2
    c = phi_m * m_star * mu_n ** 2 + m_star * lam_n * mu_n * m_star + mu_n * phi_m + lam_n
    return b, c


def bn_cn_sequences(mu, lam, m_const, m_star, phi, n_terms: int):
    """Arrays ``b[0..n_terms-1]``, ``c[...]`` for ``n = 1..n_terms``."""
    pairs = [compute_bn_cn(mu, lam, m_const, m_star, phi, n) for n in range(1, n_terms + 1)]
    if not pairs:
        return np.zeros(0), np.zeros(0)
    b, c = zip(*pairs)
    return np.array(b), np.array(c)


def verify_recursive_bound(a, b, c, tol: float = 1e-9) -> BoundCheckReport:
    """Check ``a[k+1] <= (1 + b[k]) a[k] + c[k] + tol`` for every k.

    ``b`` and ``c`` need one entry per transition, so they may have length
    ``len(a) - 1`` or ``len(a)`` (the trailing entry is then unused).
    Indices in the report are 1-based: violation ``n`` concerns ``a_{n+1}``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if a.ndim != 1 or a.size < 2:
        raise InvalidInputError("need at least two terms of a")
    steps = a.size - 1
    if b.size not in (steps, a.size) or c.size not in (steps, a.size):
        raise InvalidInputError(f"b and c need {steps} or {a.size} entries, got {b.size} and {c.size}")
    if np.any(a < 0):
        raise InvalidInputError("a must be nonnegative")
    if np.any(b < 0) or np.any(c < 0):
        raise InvalidInputError("b and c must be nonnegative")
    b, c = b[:steps], c[:steps]

    lhs = a[1:]
    rhs = (1.0 + b) * a[:-1] + c
    bad = np.nonzero(lhs > rhs + tol)[0]
    report = BoundCheckReport(
        violations=[(int(k) + 1, float(lhs[k]), float(rhs[k])) for k in bad],
        tail_sum_b=float(np.sum(b)),
        tail_sum_c=float(np.sum(c)),
    )
    report.verdict = not report.violations and math.isfinite(report.tail_sum_b) and math.isfinite(report.tail_sum_c)
    tail = max(1, a.size // 10)
    report.limit_estimate = float(np.mean(a[-tail:]))
    return report


def _residual_max(trace: IterTrace) -> np.ndarray:
    return np.maximum(trace.column("r1"), trace.column("r2"))


def residual_decay(trace: IterTrace, window: int, threshold: float) -> DecayReport:
    """Compare the largest residual in the first and last ``window`` rows.

    Passes when the tail maximum is strictly below the head maximum and below
    ``threshold``.  A trace whose residuals are identically zero passes.
    """
    if window < 1 or len(trace) < 2 * window:
        raise InvalidInputError(f"trace of {len(trace)} rows is too short for window {window}")
    r = _residual_max(trace)
    head, tail = float(np.max(r[:window])), float(np.max(r[-window:]))
    decayed = tail < head or head == tail == 0.0
    return DecayReport(bool(decayed and tail < threshold), head, tail, threshold)


def cauchy_tail(trace: IterTrace, m: int) -> float:
    """``max ||x_{n+m} - x_n||`` over ``n`` in the second half of the trace."""
    length = len(trace)
    if m < 1 or m >= length:
        raise InvalidInputError(f"need 1 <= m < trace length ({length}), got m={m}")
    xs = trace.xs
    start = min(length // 2, length - m - 1)
    diffs = xs[start + m:] - xs[start:length - m]
    return float(np.max(np.linalg.norm(diffs, axis=1)))


def distance_to_set(x, points, spec: NormSpec = EUCLIDEAN) -> float:
    """Distance from ``x`` to a finite set of points."""
    pts = list(points)
    if not pts:
        raise InvalidInputError("distance to an empty set is undefined")
    x = as_vector(x)
    return min(distance(x, as_vector(p), spec) for p in pts)


def rate_estimate(trace: IterTrace, linear_threshold: float = 0.1) -> RateReport:
    """Least-squares fit of ``log(step_delta)`` against ``n`` over the last third.

    ``rho = exp(slope)``; the model is ``linear`` when the RMS residual of the
    fit is below ``linear_threshold`` and ``rho < 1``.
    """
    n = trace.column("n")
    delta = trace.column("step_delta")
    start = (2 * len(n)) // 3
    n, delta = n[start:], delta[start:]
    keep = np.isfinite(delta) & (delta > 0)
    if np.count_nonzero(keep) < 2:
        # fall back to the whole trace before giving up
        n, delta = trace.column("n"), trace.column("step_delta")
        keep = np.isfinite(delta) & (delta > 0)
        if np.count_nonzero(keep) < 2:
            raise InvalidInputError("fewer than two positive step deltas; rate is undefined")
    n, logd = n[keep], np.log(delta[keep])
    slope, intercept = np.polyfit(n, logd, 1)
    resid = logd - (slope * n + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    rho = float(np.exp(slope))
    linear = rms < linear_threshold and rho < 1.0
    return RateReport("linear" if linear else "sublinear", rho if linear else None,
                      rms, float(slope), int(n.size))
