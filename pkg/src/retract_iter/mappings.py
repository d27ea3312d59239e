"""Mappings ``T: K -> E``, retractions ``P: E -> K`` and the ``(PT)^n`` engine.

A mapping may be nonself: its values are allowed to leave ``K``.  It may only
be *evaluated* on ``K`` (up to :data:`DOMAIN_TOL`), so every excursion out of
``K`` has to pass through a retraction before the next application.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import mapexpr
from .errors import DomainViolationError, InvalidInputError, NotFoundError, NumericalError
from .space import Ball, Interval, as_vector

__all__ = [
    "DOMAIN_TOL", "Mapping", "Retraction", "MappingPair",
    "expression_mapping", "expression_retraction", "identity_on", "metric_projection",
    "apply", "retract", "pt_power", "pt_orbit", "registry_get", "registry_names", "paper_pair",
]

DOMAIN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Mapping:
    """A mapping defined on ``domain`` with values in the ambient space.

    ``source`` is ``"builtin"`` or ``"expression"``.  For builtins ``params``
    holds the construction parameters; for expressions ``exprs`` holds one
    :class:`~retract_iter.mapexpr.Expr` per output coordinate.
    """

    name: str
    domain: object
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    source: str = "builtin"
    params: dict = field(default_factory=dict)
    exprs: tuple = ()

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, x) -> np.ndarray:
        return apply(self, x)


@dataclass(frozen=True, eq=False)
class Retraction:
    """A retraction onto ``domain``.

    ``kind`` is ``"projection"`` (metric projection onto the domain),
    ``"identity"`` (the identity map, which only retracts points already in
    the domain) or ``"expression"``.
    """

    kind: str
    domain: object
    exprs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("projection", "identity", "expression"):
            raise InvalidInputError(f"unknown retraction kind {self.kind!r}")
        if self.kind == "expression":
            if len(self.exprs) != self.domain.dim:
                raise InvalidInputError(
                    f"expression retraction needs {self.domain.dim} component(s), got {len(self.exprs)}")

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, v) -> np.ndarray:
        return retract(self, v)


@dataclass(frozen=True, eq=False)
class MappingPair:
    t1: Mapping
    t2: Mapping
    p: Retraction

    def __post_init__(self):
        if not (self.t1.domain == self.t2.domain == self.p.domain):
            raise InvalidInputError("t1, t2 and the retraction must share one domain")

    @property
    def domain(self):
        return self.t1.domain

    @property
    def dim(self) -> int:
        return self.t1.dim


def identity_on(domain) -> Retraction:
    return Retraction("identity", domain)


def metric_projection(domain) -> Retraction:
    return Retraction("projection", domain)


def _compile_components(sources, dim):
    exprs = []
    for s in sources:
        exprs.append(s if isinstance(s, mapexpr.Expr) else mapexpr.parse(s, dim))
    for e in exprs:
        if e.dim != dim:
            raise InvalidInputError(f"expression declared for dim {e.dim}, domain has dim {dim}")
    return tuple(exprs)


def expression_mapping(components: Sequence, domain, name: str = "expression") -> Mapping:
    """Build a mapping from one expression (text or parsed) per output coordinate."""
    if isinstance(components, (str, mapexpr.Expr)):
        components = [components]
    exprs = _compile_components(components, domain.dim)
    if len(exprs) != domain.dim:
        raise InvalidInputError(f"need {domain.dim} component expression(s), got {len(exprs)}")

    def fn(x):
        return np.array([e(x) for e in exprs], dtype=np.float64)

    return Mapping(name, domain, fn, "expression", {}, exprs)


def expression_retraction(components: Sequence, domain) -> Retraction:
    if isinstance(components, (str, mapexpr.Expr)):
        components = [components]
    return Retraction("expression", domain, _compile_components(components, domain.dim))


def apply(m: Mapping, x) -> np.ndarray:
    """Evaluate ``m`` at ``x``, which must lie in ``m.domain`` up to 1e-9."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != m.dim:
        raise InvalidInputError(f"{m.name} expects a vector of dim {m.dim}, got shape {x.shape}")
    if not m.domain.contains(x, DOMAIN_TOL):
        raise DomainViolationError(f"{m.name} evaluated outside its domain at {x.tolist()}", x)
    y = m.fn(x)
    if not (math.isfinite(y[0]) if y.shape[0] == 1 else np.all(np.isfinite(y))):
        raise NumericalError(f"{m.name} produced a non-finite value at {x.tolist()}")
    return y


def retract(p: Retraction, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if p.kind == "identity":
        return v
    if p.kind == "projection":
        return p.domain.project(v)
    out = np.array([e(v) for e in p.exprs], dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"retraction produced a non-finite value at {v.tolist()}")
    return out


def pt_power(m: Mapping, p: Retraction, n: int, x) -> np.ndarray:
    """``(P∘T)^n x`` by literal n-fold composition."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidInputError(f"power must be a positive integer, got {n!r}")
    for _ in range(n):
        x = retract(p, apply(m, x))
    return x


def pt_orbit(m: Mapping, p: Retraction, n_max: int, x) -> list[np.ndarray]:
    """``[(PT)^1 x, ..., (PT)^n_max x]``, sharing the composition work."""
    out = []
    for _ in range(n_max):
        x = retract(p, apply(m, x))
        out.append(x)
    return out


# -- built-in registry -------------------------------------------------------

_EXAMPLE_DOMAIN = Interval(-1.0, 1.0)


def _paper_t1(x):
    t = float(x[0])
    # x in [0, 1]: -2 sin(x/2); x in [-1, 0): 2 sin(x/2)
    return np.array([-2.0 * math.sin(t / 2.0) if t >= 0.0 else 2.0 * math.sin(t / 2.0)])


def _paper_t2(x):
    t = float(x[0])
    return np.array([t if t >= 0.0 else -t])


def _identity(domain=_EXAMPLE_DOMAIN):
    return Mapping("identity", domain, lambda x: np.array(x, dtype=np.float64))


def _affine(A=None, b=None, domain=_EXAMPLE_DOMAIN):
    d = domain.dim
    A = np.eye(d) if A is None else np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.shape == (1, 1) and d > 1:
        A = A[0, 0] * np.eye(d)
    b = np.zeros(d) if b is None else np.atleast_1d(np.asarray(b, dtype=np.float64))
    if A.shape != (d, d) or b.shape != (d,):
        raise InvalidInputError(f"affine needs A of shape ({d}, {d}) and b of length {d}")

    def fn(x):
        # overflow surfaces as a NumericalError in apply, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            return A @ x + b

    return Mapping("affine", domain, fn, params={"A": A, "b": b})


def _scaled_sin(c=1.0, domain=_EXAMPLE_DOMAIN):
    c = float(c)
    return Mapping("scaled_sin", domain, lambda x: c * np.sin(x / 2.0), params={"c": c})


def _outward_direction(domain, x):
    if isinstance(domain, Ball):
        center = domain.center
    else:
        lo, hi = domain.bounding_box()
        center = np.where(np.isfinite(lo) & np.isfinite(hi), (lo + hi) / 2.0, 0.0)
    d = x - center
    r = float(np.linalg.norm(d))
    if r == 0.0:
        d = np.zeros_like(x)
        d[0] = 1.0
        return d
    return d / r


def _outward_shift(delta=0.5, domain=_EXAMPLE_DOMAIN):
    delta = float(delta)
    if delta < 0:
        raise InvalidInputError("outward_shift needs delta >= 0")
    return Mapping("outward_shift", domain,
                   lambda x: x + delta * _outward_direction(domain, x), params={"delta": delta})


_MAPPINGS = {
    "paper_t1": lambda: Mapping("paper_t1", _EXAMPLE_DOMAIN, _paper_t1),
    "paper_t2": lambda: Mapping("paper_t2", _EXAMPLE_DOMAIN, _paper_t2),
    "identity": _identity,
    "affine": _affine,
    "scaled_sin": _scaled_sin,
    "outward_shift": _outward_shift,
}

_RETRACTIONS = {
    "metric_projection": metric_projection,
    "identity_on": identity_on,
}


def registry_names() -> list[str]:
    return sorted(_MAPPINGS) + sorted(_RETRACTIONS)


def registry_get(name: str, **params):
    """Look up a built-in mapping (or retraction) by name.

    Mapping builtins: ``paper_t1`` and ``paper_t2`` (the two piecewise maps on
    ``[-1, 1]`` with common fixed point 0), ``identity``, ``affine(A, b)``,
    ``scaled_sin(c)`` (``x -> c sin(x/2)``) and ``outward_shift(delta)``
    (``x -> x + delta * u(x)``, ``u`` the unit direction away from the domain
    center).  All but the two example maps accept ``domain=``, default ``[-1, 1]``.

    Retraction builtins: ``metric_projection(domain)`` and ``identity_on(domain)``.
    """
    if name in _MAPPINGS:
        if name.startswith("paper_") and params:
            raise InvalidInputError(f"{name} takes no parameters")
        try:
            return _MAPPINGS[name](**params)
        except TypeError as exc:
            raise InvalidInputError(f"bad parameters for {name}: {exc}") from None
    if name in _RETRACTIONS:
        if "domain" not in params:
            raise InvalidInputError(f"{name} needs a domain")
        return _RETRACTIONS[name](params["domain"])
    raise NotFoundError(f"unknown builtin {name!r}; valid names: {', '.join(registry_names())}")


def paper_pair(retraction: str = "identity") -> MappingPair:
    """The two example maps on ``[-1, 1]`` with the given retraction kind."""
    t1, t2 = registry_get("paper_t1"), registry_get("paper_t2")
    return MappingPair(t1, t2, Retraction(retraction, _EXAMPLE_DOMAIN))


def as_point(x, domain=None):
    v = as_vector(x)
    if domain is not None and v.shape[0] != domain.dim:
        raise InvalidInputError(f"point has dim {v.shape[0]}, domain has dim {domain.dim}")
    return v
