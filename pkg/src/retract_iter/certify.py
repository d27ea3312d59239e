"""Empirical certification of mapping-class inequalities.

Every check here samples points, evaluates both sides of an inequality and
reports the worst case found.  Sampling can falsify a property or support it,
never prove it, so all verdicts are empirical.

Sampling is seeded pseudo-random (numpy ``default_rng``, PCG64): uniform in a
box, uniform in a ball.  Identical seeds give identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, UnsupportedDimensionError
from .iterate import seq_value
from .mappings import Mapping, MappingPair, Retraction, apply, pt_orbit, retract
from .space import EUCLIDEAN, Ball, Box, NormSpec, as_vector

__all__ = [
    "PhiSpec", "SampleSpec", "CertRow", "CertReport", "FixedTransferRow", "WeaklyInwardReport",
    "check_retraction", "estimate_kn", "check_total", "estimate_lipschitz", "check_power_chain",
    "check_condition_aprime", "check_fixed_transfer", "check_weakly_inward_1d", "check_phi_growth",
    "DEGENERATE_PAIR",
]

DEGENERATE_PAIR = 1e-12
RETRACTION_TOL = 1e-12
INEQUALITY_TOL = 1e-9
KN_DRIFT_TOL = 0.05


@dataclass(frozen=True)
class PhiSpec:
    """A strictly increasing continuous ``phi`` with ``phi(0) = 0``.

    ``identity``: t; ``linear``: c t (c > 0); ``power``: t^p (p >= 1).
    """

    kind: str = "identity"
    c: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "linear", "power"):
            raise InvalidInputError(f"unknown phi kind {self.kind!r}")
        if self.kind == "linear" and not (self.c > 0 and math.isfinite(self.c)):
            raise InvalidInputError(f"linear phi needs c > 0, got {self.c}")
        if self.kind == "power" and not (self.p >= 1 and math.isfinite(self.p)):
            raise InvalidInputError(f"power phi needs p >= 1, got {self.p}")

    @classmethod
    def linear(cls, c: float):
        return cls("linear", c=float(c))

    @classmethod
    def power(cls, p: float):
        return cls("power", p=float(p))

    def __call__(self, t):
        if self.kind == "identity":
            return t
        if self.kind == "linear":
            return self.c * t
        return np.power(t, self.p) if isinstance(t, np.ndarray) else float(t) ** self.p


@dataclass(frozen=True)
class SampleSpec:
    count: int
    seed: int
    domain: object

    def __post_init__(self):
        if not isinstance(self.count, (int, np.integer)) or self.count < 2:
            raise InvalidInputError(f"sample count must be an integer >= 2, got {self.count!r}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2 ** 64):
            raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    def points(self, k: Optional[int] = None, enlarge: float = 1.0, stream: int = 0) -> np.ndarray:
        """``k`` points (default ``count``) drawn in the domain.

        ``enlarge > 1`` samples the bounding box scaled about its center
        instead, so that exterior points are included.  ``stream`` selects an
        independent substream of the same seed.
        """
        k = self.count if k is None else k
        rng = np.random.default_rng([self.seed, stream])
        d = self.domain
        if enlarge == 1.0 and isinstance(d, Ball):
            g = rng.standard_normal((k, d.dim))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            radii = d.radius * rng.random(k) ** (1.0 / d.dim)
            return d.center + g * radii[:, None]
        lo, hi = _finite_box(d)
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0 * enlarge
        return rng.uniform(mid - half, mid + half, size=(k, d.dim))

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        pts = self.points(2 * self.count)
        return pts[0::2], pts[1::2]


def _finite_box(domain):
    lo, hi = (np.array(b, dtype=np.float64) for b in domain.bounding_box())
    # unbounded sides are sampled over a unit-size window
    lo = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi - 2.0, -1.0))
    hi = np.where(np.isfinite(hi), hi, lo + 2.0)
    return lo, hi


@dataclass
class CertRow:
    label: str
    n: Optional[int]
    value: float
    worst_x: Optional[np.ndarray] = None
    worst_y: Optional[np.ndarray] = None
    passed: bool = True


@dataclass
class CertReport:
    """Result of one empirical check.

    ``margin`` is signed: negative means the inequality held with slack.  For
    the ratio estimates (``kn``) it is ``max k_n - 1``.
    """

    check: str
    rows: list = field(default_factory=list)
    verdict: bool = True
    margin: float = -math.inf
    worst_pair: Optional[tuple] = None
    notes: list = field(default_factory=list)
    empirical: bool = True

    @property
    def per_n(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    def row(self, label: str) -> CertRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def _norms(diff: np.ndarray, spec: NormSpec) -> np.ndarray:
    """Row norms of a (..., d) array."""
    if spec.kind == "euclidean":
        return np.linalg.norm(diff, axis=-1)
    if spec.kind == "max":
        return np.max(np.abs(diff), axis=-1)
    return np.sum(np.abs(diff) ** spec.p, axis=-1) ** (1.0 / spec.p)


def _orbits(m: Mapping, p: Retraction, pts: np.ndarray, n_max: int) -> np.ndarray:
    """Array of shape (n_max, len(pts), d) with ``(PT)^n`` of every point."""
    out = np.empty((n_max,) + pts.shape)
    for i, x in enumerate(pts):
        out[:, i, :] = pt_orbit(m, p, n_max, x)
    return out


def _space_norm(m) -> NormSpec:
    return getattr(m.domain, "norm", EUCLIDEAN)


def check_retraction(p: Retraction, samples: SampleSpec, t_grid: Sequence[float] = (0.0, 0.5, 1.0, 2.0, 10.0),
                     enlarge: float = 2.0, tol: float = RETRACTION_TOL) -> CertReport:
    """Idempotence, nonexpansiveness, sunniness and domain behaviour of ``p``.

    Samples are drawn from the domain's bounding box enlarged by ``enlarge``,
    so exterior points are exercised.  Rows:

    * ``idempotence``: max ``||P(Pv) - Pv||``
    * ``nonexpansive``: max over all sample pairs of ``||Pu - Pv|| - ||u - v||``
    * ``sunny``: max ``||P(Px + t(x - Px)) - Px||`` over samples and ``t_grid``
    * ``maps_into_domain``: max distance from ``Pv`` to the domain
    * ``fixes_domain``: max ``||Pv - v||`` over samples inside the domain
    """
    if any(t < 0 for t in t_grid):
        raise InvalidInputError("t_grid values must be >= 0")
    spec = _space_norm(p)
    dom = p.domain
    V = samples.points(enlarge=enlarge)
    PV = np.array([retract(p, v) for v in V])
    PPV = np.array([retract(p, v) for v in PV])
    report = CertReport("retraction")

    idem = _norms(PPV - PV, spec)
    k = int(np.argmax(idem))
    report.rows.append(CertRow("idempotence", None, float(idem[k]), V[k], None, idem[k] <= tol))

    gap = _norms(PV[:, None, :] - PV[None, :, :], spec) - _norms(V[:, None, :] - V[None, :, :], spec)
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    report.rows.append(CertRow("nonexpansive", None, float(gap[i, j]), V[i], V[j], gap[i, j] <= tol))

    worst, wx = -math.inf, None
    for v, pv in zip(V, PV):
        for t in t_grid:
            s = float(_norms(retract(p, pv + t * (v - pv)) - pv, spec))
            if s > worst:
                worst, wx = s, v
    report.rows.append(CertRow("sunny", None, worst, wx, None, worst <= tol))

    outside = _norms(PV - np.array([dom.project(v) for v in PV]), spec)
    k = int(np.argmax(outside))
    report.rows.append(CertRow("maps_into_domain", None, float(outside[k]), V[k], None, outside[k] <= tol))

    W = samples.points(stream=1)
    moved = _norms(np.array([retract(p, w) for w in W]) - W, spec)
    k = int(np.argmax(moved))
    report.rows.append(CertRow("fixes_domain", None, float(moved[k]), W[k], None, moved[k] <= tol))

    _summarize(report)
    return report


def _summarize(report: CertReport):
    report.verdict = all(r.passed for r in report.rows)
    worst = max(report.rows, key=lambda r: r.value)
    report.margin = worst.value
    report.worst_pair = (worst.worst_x, worst.worst_y)


def _ratio_table(m, p, samples, n_max):
    if n_max < 1:
        raise InvalidInputError("n_max must be >= 1")
    spec = _space_norm(m)
    X, Y = samples.pairs()
    dxy = _norms(X - Y, spec)
    keep = dxy >= DEGENERATE_PAIR
    X, Y, dxy = X[keep], Y[keep], dxy[keep]
    if X.shape[0] == 0:
        raise InvalidInputError("all sampled pairs are degenerate")
    OX, OY = _orbits(m, p, X, n_max), _orbits(m, p, Y, n_max)
    return X, Y, dxy, _norms(OX - OY, spec), OX, OY


def estimate_kn(m: Mapping, p: Retraction, samples: SampleSpec, n_max: int) -> CertReport:
    """Estimate ``k_n = sup ||(PT)^n x - (PT)^n y|| / ||x - y||`` for ``n <= n_max``.

    Row ``n`` passes when ``k_n <= 1 + 1e-9``.  The report verdict is the
    heuristic flag "compatible with asymptotic nonexpansiveness": the values
    ``max(k_n, 1)`` are non-increasing and end within 0.05 of 1.
    """
    X, Y, dxy, dpow, _, _ = _ratio_table(m, p, samples, n_max)
    ratios = dpow / dxy
    report = CertReport("kn")
    for n in range(1, n_max + 1):
        k = int(np.argmax(ratios[n - 1]))
        v = float(ratios[n - 1, k])
        report.rows.append(CertRow(f"n={n}", n, v, X[k], Y[k], v <= 1.0 + INEQUALITY_TOL))
    caps = np.maximum(report.per_n, 1.0)
    monotone = bool(np.all(np.diff(caps) <= INEQUALITY_TOL))
    report.verdict = monotone and caps[-1] <= 1.0 + KN_DRIFT_TOL
    worst = max(report.rows, key=lambda r: r.value)
    report.margin = worst.value - 1.0
    report.worst_pair = (worst.worst_x, worst.worst_y)
    report.notes.append("heuristic flag from sampled pairs: asymptotically nonexpansive "
                        + ("compatible" if report.verdict else "not supported"))
    return report


def estimate_lipschitz(m: Mapping, p: Retraction, samples: SampleSpec, n_max: int) -> float:
    """Largest sampled ratio over all ``n <= n_max``: an estimate of the uniform Lipschitz constant."""
    return float(np.max(estimate_kn(m, p, samples, n_max).per_n))


def check_total(m: Mapping, p: Retraction, mu, lam, phi: PhiSpec, samples: SampleSpec,
                n_max: int, tol: float = INEQUALITY_TOL) -> CertReport:
    """Check ``||(PT)^n x - (PT)^n y|| <= ||x - y|| + mu_n phi(||x - y||) + lambda_n``.

    Row ``n`` holds the largest value of LHS - RHS over the sampled pairs.
    """
    X, Y, dxy, dpow, _, _ = _ratio_table(m, p, samples, n_max)
    report = CertReport("total")
    phid = phi(dxy)
    for n in range(1, n_max + 1):
        mu_n, lam_n = seq_value(mu, n), seq_value(lam, n)
        if mu_n < 0 or lam_n < 0:
            raise InvalidInputError("mu and lambda must be nonnegative")
        margin = dpow[n - 1] - dxy - mu_n * phid - lam_n
        k = int(np.argmax(margin))
        report.rows.append(CertRow(f"n={n}", n, float(margin[k]), X[k], Y[k], margin[k] <= tol))
    _summarize(report)
    return report


def check_power_chain(m: Mapping, p: Retraction, samples: SampleSpec, n_max: int,
                      tol: float = RETRACTION_TOL) -> CertReport:
    """Check that the retraction never expands distances between mapped powers.

    Row ``n`` holds the max over pairs of
    ``||(PT)^n x - (PT)^n y|| - ||T(PT)^{n-1} x - T(PT)^{n-1} y||``, which is
    ``<= 0`` whenever ``P`` is nonexpansive.
    """
    spec = _space_norm(m)
    X, Y, dxy, dpow, OX, OY = _ratio_table(m, p, samples, n_max)
    report = CertReport("power_chain")
    for n in range(1, n_max + 1):
        PX = X if n == 1 else OX[n - 2]
        PY = Y if n == 1 else OY[n - 2]
        TX = np.array([apply(m, x) for x in PX])
        TY = np.array([apply(m, y) for y in PY])
        gap = dpow[n - 1] - _norms(TX - TY, spec)
        k = int(np.argmax(gap))
        report.rows.append(CertRow(f"n={n}", n, float(gap[k]), X[k], Y[k], gap[k] <= tol))
    _summarize(report)
    return report


def check_phi_growth(phi: PhiSpec, m_const: float, m_star: float, kappa_max: Optional[float] = None,
                     points: int = 200) -> CertReport:
    """Check ``phi(kappa) <= M* kappa`` on a grid of ``kappa >= M``.

    The grid is geometric from ``M`` to ``kappa_max`` (default ``1000 M``).
    """
    if not (m_const > 0 and m_star > 0):
        raise InvalidInputError("M and M* must be positive")
    kappa_max = 1000.0 * m_const if kappa_max is None else kappa_max
    grid = np.geomspace(m_const, max(kappa_max, m_const), points)
    excess = phi(grid) - m_star * grid
    k = int(np.argmax(excess))
    report = CertReport("phi_growth")
    report.rows.append(CertRow("phi<=M*kappa", None, float(excess[k]), np.array([grid[k]]), None,
                               excess[k] <= INEQUALITY_TOL * max(1.0, grid[k])))
    _summarize(report)
    return report


def check_condition_aprime(pair: MappingPair, f_spec: PhiSpec, f_points, samples: SampleSpec,
                           tol: float = INEQUALITY_TOL) -> CertReport:
    """Check ``f(d(x, F)) <= (||x - PT1 x|| + ||x - PT2 x||) / 2`` on sampled ``x`` in K."""
    F = [as_vector(q) for q in f_points]
    if not F:
        raise InvalidInputError("the fixed-point set F must be nonempty")
    spec = _space_norm(pair.t1)
    X = samples.points()
    Fa = np.array(F)
    dist = np.min(_norms(X[:, None, :] - Fa[None, :, :], spec), axis=1)
    PT1 = np.array([retract(pair.p, apply(pair.t1, x)) for x in X])
    PT2 = np.array([retract(pair.p, apply(pair.t2, x)) for x in X])
    avg = 0.5 * (_norms(X - PT1, spec) + _norms(X - PT2, spec))
    margin = f_spec(dist) - avg
    k = int(np.argmax(margin))
    report = CertReport("condition_aprime")
    report.rows.append(CertRow("f(d(x,F))<=avg_residual", None, float(margin[k]), X[k], None,
                               margin[k] <= tol))
    _summarize(report)
    return report


@dataclass
class FixedTransferRow:
    x: np.ndarray
    pt_residual: float
    t_residual: float
    in_fix_pt: bool
    in_fix_t: bool
    agree: bool
    note: str = ""


@dataclass
class WeaklyInwardReport:
    passed: bool
    lo: float
    hi: float
    t_lo: float
    t_hi: float


def check_weakly_inward_1d(m: Mapping, k: Optional[Box] = None) -> WeaklyInwardReport:
    """Weak inwardness on an interval ``[lo, hi]``.

    Only the endpoints constrain anything (the inward set of an interior point
    is the whole line), so this checks ``T(lo) >= lo`` and ``T(hi) <= hi``.
    """
    k = m.domain if k is None else k
    if m.dim != 1 or not isinstance(k, Box) or k.dim != 1:
        raise UnsupportedDimensionError("weak inwardness is only checked for mappings on an interval")
    lo, hi = float(k.lo[0]), float(k.hi[0])
    t_lo = float(apply(m, [lo])[0]) if math.isfinite(lo) else -math.inf
    t_hi = float(apply(m, [hi])[0]) if math.isfinite(hi) else math.inf
    return WeaklyInwardReport(t_lo >= lo and t_hi <= hi, lo, hi, t_lo, t_hi)


def check_fixed_transfer(m: Mapping, p: Retraction, candidates, tol: float = 1e-10) -> list[FixedTransferRow]:
    """Compare membership in the fixed-point sets of ``PT`` and ``T`` for each candidate.

    The two sets coincide for weakly inward mappings; when they disagree on a
    candidate the row note says whether that hypothesis fails.
    """
    spec = _space_norm(m)
    rows = []
    for c in candidates:
        x = as_vector(c)
        tx = apply(m, x)
        r_pt = float(_norms(retract(p, tx) - x, spec))
        r_t = float(_norms(tx - x, spec))
        row = FixedTransferRow(x, r_pt, r_t, r_pt <= tol, r_t <= tol, (r_pt <= tol) == (r_t <= tol))
        if not row.agree:
            try:
                inward = check_weakly_inward_1d(m)
                row.note = ("mapping is not weakly inward, so the fixed-point sets may differ"
                            if not inward.passed else
                            "disagreement although the endpoint inwardness check passed")
            except UnsupportedDimensionError:
                row.note = "disagreement; weak inwardness not checked for dim > 1"
        rows.append(row)
    return rows
