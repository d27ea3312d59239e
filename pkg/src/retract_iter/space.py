"""Finite-dimensional vectors, norms, convex domains and metric projections.

Vectors are plain 1-D ``float64`` numpy arrays.  Domains are immutable
dataclasses; the projection of a domain is the retraction used by the
iteration schemes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "NormSpec", "EUCLIDEAN", "MAX", "p_norm",
    "Interval", "Box", "Ball",
    "as_vector", "norm", "distance", "project", "contains", "lincomb",
]


def as_vector(coords) -> np.ndarray:
    """Validate ``coords`` and return it as a read-only 1-D float64 array."""
    try:
        v = np.array(coords, dtype=np.float64, ndmin=1)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"not a vector: {coords!r}") from exc
    if v.ndim != 1:
        raise InvalidInputError(f"vector must be 1-D, got shape {v.shape}")
    if v.size == 0:
        raise InvalidInputError("vector must have dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"vector has non-finite coordinates: {v}")
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class NormSpec:
    """Which norm the ambient space carries.

    ``kind`` is one of ``"euclidean"``, ``"p"`` or ``"max"``; ``p`` is only
    read for ``kind == "p"``.
    """

    kind: str = "euclidean"
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "p", "max"):
            raise InvalidInputError(f"unknown norm kind {self.kind!r}")
        if self.kind == "p" and not (self.p >= 1.0 and math.isfinite(self.p)):
            raise InvalidInputError(f"p-norm needs finite p >= 1, got {self.p}")

    def __call__(self, v) -> float:
        return norm(v, self)


EUCLIDEAN = NormSpec("euclidean")
MAX = NormSpec("max")


def p_norm(p: float) -> NormSpec:
    return NormSpec("p", float(p))


def _norm(v: np.ndarray, spec: NormSpec) -> float:
    # Unchecked fast path used inside iteration loops.
    if v.shape[0] == 1:
        return abs(float(v[0]))
    if spec.kind == "euclidean":
        return float(np.linalg.norm(v))
    if spec.kind == "max":
        return float(np.max(np.abs(v)))
    return float(np.sum(np.abs(v) ** spec.p) ** (1.0 / spec.p))


def norm(v, spec: NormSpec = EUCLIDEAN) -> float:
    """Norm of ``v`` under ``spec``.

    >>> norm([3.0, 4.0])
    5.0
    """
    return _norm(as_vector(v), spec)


def distance(u, w, spec: NormSpec = EUCLIDEAN) -> float:
    return _norm(np.subtract(u, w), spec)


def lincomb(a: float, u, b: float, w) -> np.ndarray:
    """Return ``a*u + b*w``."""
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if u.shape != w.shape:
        raise InvalidInputError(f"dimension mismatch: {u.shape} vs {w.shape}")
    return a * u + b * w


def _check_dim(domain, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != domain.dim:
        raise InvalidInputError(
            f"dimension mismatch: domain has dim {domain.dim}, vector has shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``lo <= x <= hi``.  Bounds may be infinite."""

    lo: np.ndarray
    hi: np.ndarray
    norm: NormSpec = field(default=EUCLIDEAN, compare=False)

    def __post_init__(self):
        lo = np.array(self.lo, dtype=np.float64, ndmin=1)
        hi = np.array(self.hi, dtype=np.float64, ndmin=1)
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
            raise InvalidInputError("box bounds must be 1-D arrays of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or not np.all(lo < hi):
            raise InvalidInputError(f"box needs lo < hi coordinatewise, got {lo}, {hi}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def project(self, v) -> np.ndarray:
        v = _check_dim(self, v)
        return np.minimum(np.maximum(v, self.lo), self.hi)

    def contains(self, v, tol: float = 0.0) -> bool:
        v = _check_dim(self, v)
        if v.shape[0] == 1:
            t = float(v[0])
            return self.lo[0] - tol <= t <= self.hi[0] + tol
        if tol == 0.0:
            return bool(np.all(v >= self.lo) and np.all(v <= self.hi))
        return _norm(v - self.project(v), self.norm) <= tol

    def bounding_box(self):
        return self.lo, self.hi

    def __eq__(self, other):
        return (isinstance(other, Box) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def diameter(self) -> float:
        return _norm(self.hi - self.lo, self.norm)


class Interval(Box):
    """The closed interval ``[lo, hi]`` of the real line."""

    def __init__(self, lo: float, hi: float, norm: NormSpec = EUCLIDEAN):
        super().__init__(np.array([lo], dtype=np.float64),
                         np.array([hi], dtype=np.float64), norm)

    def __repr__(self):
        return f"Interval({self.lo[0]!r}, {self.hi[0]!r})"


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed ball ``||x - center|| <= radius`` in the domain's norm.

    The projection is radial scaling toward the center.  It is the metric
    projection only for the euclidean norm.
    """

    center: np.ndarray
    radius: float
    norm: NormSpec = field(default=EUCLIDEAN, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InvalidInputError(f"ball radius must be positive and finite, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, v) -> np.ndarray:
        v = _check_dim(self, v)
        d = v - self.center
        r = _norm(d, self.norm)
        if r <= self.radius:
            return v
        return self.center + (self.radius / r) * d

    def contains(self, v, tol: float = 0.0) -> bool:
        v = _check_dim(self, v)
        return _norm(v - self.center, self.norm) <= self.radius + tol

    def __eq__(self, other):
        return (isinstance(other, Ball) and self.radius == other.radius
                and np.array_equal(self.center, other.center) and self.norm == other.norm)

    def __hash__(self):
        return hash((self.center.tobytes(), self.radius))

    def bounding_box(self):
        # Valid for every p-norm, since |x_i| <= ||x||_p.
        return self.center - self.radius, self.center + self.radius

    def diameter(self) -> float:
        return 2.0 * self.radius


def project(domain, v) -> np.ndarray:
    """Metric projection of ``v`` onto ``domain``; identity on interior points."""
    return domain.project(v)


def contains(domain, v, tol: float = 0.0) -> bool:
    """Whether ``v`` lies in ``domain`` enlarged by ``tol``."""
    if tol < 0:
        raise InvalidInputError(f"tolerance must be >= 0, got {tol}")
    return domain.contains(v, tol)
