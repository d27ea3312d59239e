"""Two-mapping fixed-point iteration with Mann and Ishikawa baselines.

The main scheme (``paper_b``) advances an iterate ``x_n`` through

    y_n     = (1 - beta_n) x_n + beta_n (PT1)^n x_n
    x_{n+1} = (1 - alpha_n) (PT1)^n y_n + alpha_n (PT2)^n y_n

where ``(PT)^n`` is the n-fold composition of retraction after mapping.  Step
``n`` therefore costs O(n) mapping evaluations and a run of N steps costs
O(N^2); the powers are recomputed from scratch every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidInputError, NumericalError, RetractIterError
from .mappings import MappingPair, apply, pt_power, retract
from .space import as_vector

__all__ = [
    "StepSequence", "SummableSequence", "RunConfig", "TraceRow", "IterTrace", "RunOutcome",
    "seq_value", "run_scheme", "compare_schemes", "SCHEMES",
]

SCHEMES = ("paper_b", "mann", "ishikawa")

DRIFT_TOL = 1e-12
STAGNATION_DELTA = 1e-16
STAGNATION_STEPS = 10


@dataclass(frozen=True)
class StepSequence:
    """Step sizes ``alpha_n`` / ``beta_n``.

    kinds:
      * ``constant``: ``c`` for every n, with ``c`` in ``[eps, 1 - eps]``
      * ``clipped_harmonic``: ``max(eps, min(1 - eps, scale / n))``
      * ``table``: explicit values in ``[0, 1]``, indexed from n = 1
    """

    kind: str
    c: float = 0.5
    scale: float = 1.0
    eps: float = 0.01
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "clipped_harmonic", "table"):
            raise InvalidInputError(f"unknown step sequence kind {self.kind!r}")
        if self.kind != "table" and not (0.0 < self.eps < 0.5):
            raise InvalidInputError(f"eps must lie in (0, 0.5), got {self.eps}")
        if self.kind == "constant" and not (self.eps <= self.c <= 1.0 - self.eps):
            raise InvalidInputError(f"constant step {self.c} outside [eps, 1 - eps] = [{self.eps}, {1 - self.eps}]")
        if self.kind == "clipped_harmonic" and not self.scale > 0:
            raise InvalidInputError("clipped_harmonic needs scale > 0")
        if self.kind == "table":
            vals = tuple(float(v) for v in self.values)
            if not vals or not all(0.0 <= v <= 1.0 for v in vals):
                raise InvalidInputError("table step values must be a nonempty list in [0, 1]")
            object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, c: float, eps: Optional[float] = None):
        # default eps as large as c allows, so any c in (0, 1) is accepted
        if eps is None:
            eps = min(c, 1.0 - c, 0.49) if 0.0 < c < 1.0 else 0.01
        return cls("constant", c=float(c), eps=float(eps))

    @classmethod
    def clipped_harmonic(cls, eps: float, scale: float = 1.0):
        return cls("clipped_harmonic", scale=float(scale), eps=float(eps))

    @classmethod
    def table(cls, values):
        return cls("table", values=tuple(values))

    def __call__(self, n: int) -> float:
        return seq_value(self, n)


@dataclass(frozen=True)
class SummableSequence:
    """Nonnegative summable sequences ``mu_n`` / ``lambda_n``.

    kinds: ``zero``, ``inverse_power`` (``c / n^p``, p > 1), ``geometric``
    (``c r^n``, 0 < r < 1) and ``table`` (explicit values plus a declared
    bound ``tail_bound`` on the sum of the whole sequence).
    """

    kind: str = "zero"
    c: float = 1.0
    p: float = 2.0
    r: float = 0.5
    values: tuple = ()
    tail_bound: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("zero", "inverse_power", "geometric", "table"):
            raise InvalidInputError(f"unknown summable sequence kind {self.kind!r}")
        if self.kind in ("inverse_power", "geometric") and not self.c >= 0:
            raise InvalidInputError("c must be >= 0")
        if self.kind == "inverse_power" and not self.p > 1:
            raise InvalidInputError(f"inverse_power needs p > 1 for summability, got {self.p}")
        if self.kind == "geometric" and not (0.0 < self.r < 1.0):
            raise InvalidInputError(f"geometric needs 0 < r < 1, got {self.r}")
        if self.kind == "table":
            vals = tuple(float(v) for v in self.values)
            if not vals or not all(v >= 0 and math.isfinite(v) for v in vals):
                raise InvalidInputError("table values must be a nonempty list of finite reals >= 0")
            if self.tail_bound is None or not math.isfinite(self.tail_bound) or self.tail_bound < sum(vals):
                raise InvalidInputError("table sequences need a finite tail_bound >= sum of the values")
            object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def inverse_power(cls, c: float, p: float):
        return cls("inverse_power", c=float(c), p=float(p))

    @classmethod
    def geometric(cls, c: float, r: float):
        return cls("geometric", c=float(c), r=float(r))

    def total_bound(self) -> float:
        """Upper bound on the sum over all n >= 1."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "inverse_power":
            # sum_{n>=1} n^-p <= 1 + 1/(p - 1)
            return self.c * (1.0 + 1.0 / (self.p - 1.0))
        if self.kind == "geometric":
            return self.c * self.r / (1.0 - self.r)
        return float(self.tail_bound)

    def __call__(self, n: int) -> float:
        return seq_value(self, n)


def seq_value(s: Union[StepSequence, SummableSequence], n: int) -> float:
    """The n-th term (n >= 1) of a step or summable sequence."""
    if n < 1:
        raise InvalidInputError(f"sequences are indexed from 1, got n={n}")
    kind = s.kind
    if kind == "table":
        if n > len(s.values):
            raise InvalidInputError(f"table sequence exhausted at n={n} (length {len(s.values)})")
        return s.values[n - 1]
    if kind == "constant":
        return s.c
    if kind == "clipped_harmonic":
        return max(s.eps, min(1.0 - s.eps, s.scale / n))
    if kind == "zero":
        return 0.0
    if kind == "inverse_power":
        return s.c / n ** s.p
    return s.c * s.r ** n


@dataclass(frozen=True)
class RunConfig:
    """One run of a scheme.

    ``early_stop=False`` disables both the residual-tolerance and the
    stagnation stopping rules, so the run always lasts ``max_iter`` steps.
    """

    scheme: str
    alpha: StepSequence
    beta: StepSequence
    x1: np.ndarray
    max_iter: int = 500
    residual_tol: float = 1e-8
    record_power_gap: bool = True
    early_stop: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidInputError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        object.__setattr__(self, "x1", as_vector(self.x1))
        if not (isinstance(self.max_iter, (int, np.integer)) and self.max_iter >= 1):
            raise InvalidInputError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not self.residual_tol > 0:
            raise InvalidInputError(f"residual_tol must be > 0, got {self.residual_tol}")


@dataclass
class TraceRow:
    n: int
    x: np.ndarray
    y: Optional[np.ndarray]
    r1: float
    r2: float
    dist_p: Optional[float] = None
    power_gap: Optional[float] = None
    step_delta: Optional[float] = None


@dataclass
class IterTrace:
    scheme: str
    rows: list = field(default_factory=list)
    terminal: str = "max-iter"

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        """A scalar column as a float array; missing entries become NaN."""
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name)
                         for r in self.rows], dtype=np.float64)

    @property
    def xs(self) -> np.ndarray:
        return np.array([r.x for r in self.rows])

    @property
    def final(self) -> np.ndarray:
        return self.rows[-1].x


@dataclass
class RunOutcome:
    config: RunConfig
    trace: Optional[IterTrace] = None
    error: Optional[Exception] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _dist(u, w) -> float:
    d = u - w
    return abs(float(d[0])) if d.shape[0] == 1 else float(np.linalg.norm(d))


def _keep_feasible(domain, v):
    # convex combinations of points of K stay in K up to rounding
    return v if domain.contains(v, DRIFT_TOL) else domain.project(v)


def run_scheme(cfg: RunConfig, pair: MappingPair, reference_p=None) -> IterTrace:
    """Run ``cfg.scheme`` on ``pair`` and record the full trace.

    Row ``n`` holds ``x_n``, ``y_n``, the one-step residuals
    ``||x_n - PT_i x_n||``, the distance to ``reference_p``, the gap
    ``||(PT1)^n y_n - (PT2)^n y_n||`` and ``||x_{n+1} - x_n||``.  The run stops
    at the first ``n`` whose residuals are both ``<= residual_tol`` (that row
    carries no step data), at ``max_iter``, or once ``||x_{n+1} - x_n||`` stayed
    below 1e-16 for 10 consecutive steps.
    """
    domain = pair.domain
    x = cfg.x1
    if x.shape[0] != domain.dim:
        raise InvalidInputError(f"x1 has dim {x.shape[0]}, domain has dim {domain.dim}")
    if not domain.contains(x, 0.0):
        raise InvalidInputError(f"x1 = {x.tolist()} lies outside the domain")
    ref = None if reference_p is None else as_vector(reference_p)

    trace = IterTrace(cfg.scheme)
    try:
        _advance(cfg, pair, x, ref, trace)
    except NumericalError as exc:
        if exc.n is None:
            exc.n = len(trace.rows)
        raise
    return trace


def _advance(cfg, pair, x, ref, trace):
    domain, t1, t2, p = pair.domain, pair.t1, pair.t2, pair.p
    quiet = 0
    for n in range(1, cfg.max_iter + 1):
        r1 = _dist(x, retract(p, apply(t1, x)))
        r2 = _dist(x, retract(p, apply(t2, x)))
        row = TraceRow(n, x, None, r1, r2, None if ref is None else _dist(x, ref))
        trace.rows.append(row)
        if cfg.early_stop and max(r1, r2) <= cfg.residual_tol:
            trace.terminal = "tol-reached"
            return

        a = seq_value(cfg.alpha, n)
        if cfg.scheme == "mann":
            x_next = (1.0 - a) * x + a * pt_power(t1, p, n, x)
        else:
            b = seq_value(cfg.beta, n)
            y = x if b == 0.0 else _keep_feasible(domain, (1.0 - b) * x + b * pt_power(t1, p, n, x))
            row.y = y
            if cfg.scheme == "ishikawa":
                x_next = (1.0 - a) * x + a * pt_power(t1, p, n, y)
            else:
                u = pt_power(t1, p, n, y)
                w = pt_power(t2, p, n, y)
                x_next = (1.0 - a) * u + a * w
                if cfg.record_power_gap:
                    row.power_gap = _dist(u, w)
        if not np.all(np.isfinite(x_next)):
            raise NumericalError(f"non-finite iterate at step {n + 1}", n=n + 1)
        x_next = _keep_feasible(domain, x_next)
        row.step_delta = _dist(x_next, x)

        quiet = quiet + 1 if row.step_delta < STAGNATION_DELTA else 0
        x = x_next
        if cfg.early_stop and quiet >= STAGNATION_STEPS:
            trace.terminal = "stagnation"
            return
    trace.terminal = "max-iter"


def compare_schemes(cfgs: Sequence[RunConfig], pair: MappingPair, reference_p=None) -> list[RunOutcome]:
    """Run each config independently.  A failing run only marks its own slot."""
    outcomes = []
    for cfg in cfgs:
        try:
            outcomes.append(RunOutcome(cfg, run_scheme(cfg, pair, reference_p)))
        except RetractIterError as exc:
            outcomes.append(RunOutcome(cfg, error=exc))
    return outcomes
