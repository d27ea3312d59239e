"""Experiment configuration: YAML document -> validated objects.

Schema (all keys optional unless marked; unknown keys are rejected)::

    space:
      dim: 1                      # must match the domain
      norm: euclidean             # euclidean | max | {p: <real >= 1>}
    domain:                       # required
      kind: interval              # interval | box | ball
      lo: -1.0                    # interval: number, box: list
      hi: 1.0
      center: [0, 0]              # ball only
      radius: 1.0                 # ball only
    mappings:                     # required
      t1: {builtin: paper_t1}     # or {builtin: affine, params: {A: .., b: ..}}
      t2: {expr: ["x >= 0 ? x : -x"]}
      retraction: {kind: projection}   # identity | projection | expression (+ expr)
      fixed_points: [[0.0]]       # known common fixed points; default [[0]] for the
                                  # built-in example pair, otherwise none
    scheme:                       # required; a list of blocks for `compare`
      kind: paper_b               # paper_b | mann | ishikawa
      alpha: 0.5                  # number = constant, or {kind: .., ...}
      beta: 0.5
      x1: 1.0                     # required
      max_iter: 500
      residual_tol: 1.0e-8
      record_power_gap: true
      early_stop: true
    certify:
      enabled: false
      samples: 2000
      seed: 12345
      n_max: 10
      mu: {kind: zero}            # zero | inverse_power(c, p) | geometric(c, r) | table
      lambda: {kind: zero}
      phi: {kind: identity}       # identity | linear(c) | power(p)
      M: null                     # null = domain diameter
      M_star: 1.0
      f: {kind: linear, c: 0.25}  # function of the distance to F, same kinds as phi
    output:
      dir: out
      emit_csv: true
      emit_svg: true
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from ..certify import PhiSpec
from ..errors import RetractIterError
from ..iterate import RunConfig, StepSequence, SummableSequence
from ..mapexpr import ParseError
from ..mappings import (MappingPair, Retraction, expression_mapping, expression_retraction,
                        registry_get)
from ..space import Ball, Box, Interval, NormSpec

__all__ = ["ConfigError", "ExperimentConfig", "CertifySettings", "OutputSettings",
           "load_config", "parse_config", "DEFAULT_SEED"]

DEFAULT_SEED = 12345


class ConfigError(RetractIterError, ValueError):
    def __init__(self, path: str, message: str, line: Optional[int] = None):
        where = path or "<document>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


@dataclass
class CertifySettings:
    enabled: bool = False
    samples: int = 2000
    seed: int = DEFAULT_SEED
    n_max: int = 10
    mu: SummableSequence = field(default_factory=SummableSequence)
    lam: SummableSequence = field(default_factory=SummableSequence)
    phi: PhiSpec = field(default_factory=PhiSpec)
    m_const: Optional[float] = None
    m_star: float = 1.0
    f: PhiSpec = field(default_factory=lambda: PhiSpec.linear(0.25))


@dataclass
class OutputSettings:
    dir: str = "out"
    emit_csv: bool = True
    emit_svg: bool = True


@dataclass
class ExperimentConfig:
    domain: Any
    pair: MappingPair
    schemes: list  # list[RunConfig]
    fixed_points: list
    certify: CertifySettings
    output: OutputSettings
    scheme_is_list: bool = False

    @property
    def scheme(self) -> RunConfig:
        return self.schemes[0]

    @property
    def reference_p(self):
        return self.fixed_points[0] if self.fixed_points else None


# -- line tracking -----------------------------------------------------------

def _line_index(text: str) -> dict:
    """Map dotted key paths to 1-based source lines."""
    lines: dict = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return lines

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                sub = f"{path}.{k.value}" if path else str(k.value)
                lines[sub] = k.start_mark.line + 1
                walk(v, sub)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                sub = f"{path}[{i}]"
                lines[sub] = v.start_mark.line + 1
                walk(v, sub)

    if root is not None:
        walk(root, "")
    return lines


def _as_number(v):
    # PyYAML follows YAML 1.1, which reads ``1e-8`` (no dot) as a string
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


class _Reader:
    """Typed access to the raw document with path-aware errors."""

    def __init__(self, lines: dict):
        self.lines = lines

    def error(self, path, message):
        line = self.lines.get(path)
        probe = path
        while line is None and "." in probe:
            probe = probe.rsplit(".", 1)[0]
            line = self.lines.get(probe)
        return ConfigError(path, message, line)

    def section(self, doc, path, allowed, required=False):
        value = doc.get(path.rsplit(".", 1)[-1]) if isinstance(doc, dict) else None
        if value is None:
            if required:
                raise self.error(path, "required section is missing")
            return {}
        if not isinstance(value, dict):
            raise self.error(path, f"expected a mapping, got {type(value).__name__}")
        self.no_unknown(value, path, allowed)
        return value

    def no_unknown(self, d, path, allowed):
        for k in d:
            if k not in allowed:
                sub = f"{path}.{k}" if path else str(k)
                raise self.error(sub, f"unknown key {k!r}; allowed: {', '.join(sorted(allowed))}")

    def number(self, d, key, path, default=None, positive=False, allow_inf=False):
        v = _as_number(d.get(key, default))
        p = f"{path}.{key}"
        if v is None:
            if default is None and key not in d:
                raise self.error(p, "required value is missing")
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.error(p, f"expected a number, got {v!r}")
        v = float(v)
        if math.isnan(v) or (math.isinf(v) and not allow_inf):
            raise self.error(p, f"expected a finite number, got {v!r}")
        if positive and not v > 0:
            raise self.error(p, f"must be > 0, got {v!r}")
        return v

    def integer(self, d, key, path, default, minimum=1):
        v = d.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
            raise self.error(f"{path}.{key}", f"expected an integer >= {minimum}, got {v!r}")
        return v

    def boolean(self, d, key, path, default):
        v = d.get(key, default)
        if not isinstance(v, bool):
            raise self.error(f"{path}.{key}", f"expected true or false, got {v!r}")
        return v

    def vector(self, v, path, dim=None, allow_inf=False):
        coords = [_as_number(c) for c in (v if isinstance(v, list) else [v])]
        if not coords or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in coords):
            raise self.error(path, f"expected a number or a list of numbers, got {v!r}")
        arr = np.array(coords, dtype=np.float64)
        if np.any(np.isnan(arr)) or (not allow_inf and not np.all(np.isfinite(arr))):
            raise self.error(path, f"coordinates must be finite, got {v!r}")
        if dim is not None and arr.shape[0] != dim:
            raise self.error(path, f"expected {dim} coordinate(s), got {arr.shape[0]}")
        return arr


# -- sections ----------------------------------------------------------------

def _norm(r: _Reader, space) -> NormSpec:
    v = space.get("norm", "euclidean")
    if isinstance(v, dict):
        r.no_unknown(v, "space.norm", {"p"})
        p = r.number(v, "p", "space.norm")
        if p < 1:
            raise r.error("space.norm.p", f"p must be >= 1, got {p}")
        return NormSpec("p", p)
    if v not in ("euclidean", "max"):
        raise r.error("space.norm", f"expected euclidean, max or {{p: ...}}, got {v!r}")
    return NormSpec(v)


def _domain(r: _Reader, doc, norm):
    d = r.section(doc, "domain", {"kind", "lo", "hi", "center", "radius"}, required=True)
    kind = d.get("kind")
    try:
        if kind == "interval":
            lo = r.number(d, "lo", "domain", allow_inf=True)
            hi = r.number(d, "hi", "domain", allow_inf=True)
            return Interval(lo, hi, norm)
        if kind == "box":
            for k in ("lo", "hi"):
                if k not in d:
                    raise r.error(f"domain.{k}", "required value is missing")
            return Box(r.vector(d["lo"], "domain.lo", allow_inf=True),
                       r.vector(d["hi"], "domain.hi", allow_inf=True), norm)
        if kind == "ball":
            if "center" not in d:
                raise r.error("domain.center", "required value is missing")
            return Ball(r.vector(d["center"], "domain.center"),
                        r.number(d, "radius", "domain", positive=True), norm)
    except ConfigError:
        raise
    except RetractIterError as exc:
        raise r.error("domain", str(exc)) from None
    raise r.error("domain.kind", f"expected interval, box or ball, got {kind!r}")


def _mapping(r: _Reader, spec, path, domain):
    if not isinstance(spec, dict):
        raise r.error(path, "expected a mapping with 'builtin' or 'expr'")
    r.no_unknown(spec, path, {"builtin", "params", "expr"})
    if ("builtin" in spec) == ("expr" in spec):
        raise r.error(path, "give exactly one of 'builtin' or 'expr'")
    if "expr" in spec:
        exprs = spec["expr"] if isinstance(spec["expr"], list) else [spec["expr"]]
        if not all(isinstance(e, str) for e in exprs):
            raise r.error(f"{path}.expr", "expressions must be strings")
        try:
            return expression_mapping(exprs, domain, name=path.rsplit(".", 1)[-1])
        except ParseError as exc:
            raise r.error(f"{path}.expr", str(exc)) from None
        except RetractIterError as exc:
            raise r.error(f"{path}.expr", str(exc)) from None
    params = dict(spec.get("params") or {})
    name = spec["builtin"]
    if not isinstance(name, str):
        raise r.error(f"{path}.builtin", f"expected a builtin name, got {name!r}")
    if name in ("metric_projection", "identity_on"):
        raise r.error(f"{path}.builtin", f"{name!r} is a retraction, not a mapping")
    try:
        if name.startswith("paper_"):
            m = registry_get(name, **params)
            if m.domain != domain:
                raise r.error("domain", f"{name} is defined on [-1, 1]; the domain must be that interval")
            return m
        return registry_get(name, domain=domain, **params)
    except ConfigError:
        raise
    except (RetractIterError, TypeError) as exc:
        raise r.error(f"{path}.builtin", str(exc)) from None


def _retraction(r: _Reader, spec, domain) -> Retraction:
    path = "mappings.retraction"
    if spec is None:
        return Retraction("projection", domain)
    if not isinstance(spec, dict):
        raise r.error(path, "expected a mapping with 'kind'")
    r.no_unknown(spec, path, {"kind", "expr"})
    kind = spec.get("kind", "projection")
    if kind in ("identity", "projection"):
        if "expr" in spec:
            raise r.error(f"{path}.expr", "'expr' only applies to kind expression")
        return Retraction(kind, domain)
    if kind == "expression":
        exprs = spec.get("expr")
        exprs = exprs if isinstance(exprs, list) else [exprs]
        if not all(isinstance(e, str) for e in exprs):
            raise r.error(f"{path}.expr", "expressions must be strings")
        try:
            return expression_retraction(exprs, domain)
        except RetractIterError as exc:
            raise r.error(f"{path}.expr", str(exc)) from None
    raise r.error(f"{path}.kind", f"expected identity, projection or expression, got {kind!r}")


def _step(r: _Reader, v, path) -> StepSequence:
    v = _as_number(v)
    try:
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return StepSequence.constant(float(v))
        if not isinstance(v, dict):
            raise r.error(path, f"expected a number or a mapping, got {v!r}")
        r.no_unknown(v, path, {"kind", "c", "eps", "scale", "values"})
        kind = v.get("kind")
        if kind == "constant":
            eps = v.get("eps")
            return StepSequence.constant(r.number(v, "c", path), None if eps is None else r.number(v, "eps", path))
        if kind == "clipped_harmonic":
            return StepSequence.clipped_harmonic(r.number(v, "eps", path), r.number(v, "scale", path, default=1.0))
        if kind == "table":
            return StepSequence.table(r.vector(v.get("values"), f"{path}.values"))
        raise r.error(f"{path}.kind", f"expected constant, clipped_harmonic or table, got {kind!r}")
    except ConfigError:
        raise
    except RetractIterError as exc:
        raise r.error(path, str(exc)) from None


def _summable(r: _Reader, v, path) -> SummableSequence:
    if v is None:
        return SummableSequence()
    if not isinstance(v, dict):
        raise r.error(path, f"expected a mapping with 'kind', got {v!r}")
    r.no_unknown(v, path, {"kind", "c", "p", "r", "values", "tail_bound"})
    kind = v.get("kind")
    try:
        if kind == "zero":
            return SummableSequence()
        if kind == "inverse_power":
            return SummableSequence.inverse_power(r.number(v, "c", path, default=1.0), r.number(v, "p", path))
        if kind == "geometric":
            return SummableSequence.geometric(r.number(v, "c", path, default=1.0), r.number(v, "r", path))
        if kind == "table":
            return SummableSequence("table", values=tuple(r.vector(v.get("values"), f"{path}.values")),
                                    tail_bound=r.number(v, "tail_bound", path))
    except ConfigError:
        raise
    except RetractIterError as exc:
        raise r.error(path, str(exc)) from None
    raise r.error(f"{path}.kind", f"expected zero, inverse_power, geometric or table, got {kind!r}")


def _phi(r: _Reader, v, path, default: PhiSpec) -> PhiSpec:
    if v is None:
        return default
    if not isinstance(v, dict):
        raise r.error(path, f"expected a mapping with 'kind', got {v!r}")
    r.no_unknown(v, path, {"kind", "c", "p"})
    kind = v.get("kind")
    try:
        if kind == "identity":
            return PhiSpec()
        if kind == "linear":
            return PhiSpec.linear(r.number(v, "c", path))
        if kind == "power":
            return PhiSpec.power(r.number(v, "p", path))
    except ConfigError:
        raise
    except RetractIterError as exc:
        raise r.error(path, str(exc)) from None
    raise r.error(f"{path}.kind", f"expected identity, linear or power, got {kind!r}")


_SCHEME_KEYS = {"kind", "alpha", "beta", "x1", "max_iter", "residual_tol", "record_power_gap", "early_stop"}


def _scheme(r: _Reader, block, path, domain) -> RunConfig:
    if not isinstance(block, dict):
        raise r.error(path, "expected a mapping")
    r.no_unknown(block, path, _SCHEME_KEYS)
    kind = block.get("kind", "paper_b")
    if kind not in ("paper_b", "mann", "ishikawa"):
        raise r.error(f"{path}.kind", f"expected paper_b, mann or ishikawa, got {kind!r}")
    if "x1" not in block:
        raise r.error(f"{path}.x1", "required value is missing")
    x1 = r.vector(block["x1"], f"{path}.x1", dim=domain.dim)
    if not domain.contains(x1, 0.0):
        raise r.error(f"{path}.x1", f"starting point {x1.tolist()} lies outside the domain")
    return RunConfig(
        scheme=kind,
        alpha=_step(r, block.get("alpha", 0.5), f"{path}.alpha"),
        beta=_step(r, block.get("beta", 0.5), f"{path}.beta"),
        x1=x1,
        max_iter=r.integer(block, "max_iter", path, 500),
        residual_tol=r.number(block, "residual_tol", path, default=1e-8, positive=True),
        record_power_gap=r.boolean(block, "record_power_gap", path, True),
        early_stop=r.boolean(block, "early_stop", path, True),
    )


def parse_config(doc, lines: Optional[dict] = None, seed_override: Optional[int] = None) -> ExperimentConfig:
    """Validate a loaded document and build the experiment objects."""
    r = _Reader(lines or {})
    if not isinstance(doc, dict):
        raise ConfigError("", "the config must be a mapping at top level")
    r.no_unknown(doc, "", {"space", "domain", "mappings", "scheme", "certify", "output"})

    space = r.section(doc, "space", {"dim", "norm"})
    norm = _norm(r, space)
    domain = _domain(r, doc, norm)
    if "dim" in space:
        dim = r.integer(space, "dim", "space", 1)
        if dim != domain.dim:
            raise r.error("space.dim", f"dim {dim} does not match the domain's dimension {domain.dim}")

    maps = r.section(doc, "mappings", {"t1", "t2", "retraction", "fixed_points"}, required=True)
    for k in ("t1", "t2"):
        if k not in maps:
            raise r.error(f"mappings.{k}", "required value is missing")
    t1 = _mapping(r, maps["t1"], "mappings.t1", domain)
    t2 = _mapping(r, maps["t2"], "mappings.t2", domain)
    pair = MappingPair(t1, t2, _retraction(r, maps.get("retraction"), domain))

    if "fixed_points" in maps:
        fp = maps["fixed_points"]
        if not isinstance(fp, list):
            raise r.error("mappings.fixed_points", "expected a list of points")
        fixed = [r.vector(q, f"mappings.fixed_points[{i}]", dim=domain.dim) for i, q in enumerate(fp)]
    elif t1.name == "paper_t1" and t2.name == "paper_t2":
        fixed = [np.zeros(1)]
    else:
        fixed = []

    if "scheme" not in doc or doc["scheme"] is None:
        raise r.error("scheme", "required section is missing")
    raw = doc["scheme"]
    is_list = isinstance(raw, list)
    blocks = raw if is_list else [raw]
    schemes = [_scheme(r, b, f"scheme[{i}]" if is_list else "scheme", domain) for i, b in enumerate(blocks)]
    if not schemes:
        raise r.error("scheme", "at least one scheme block is required")

    c = r.section(doc, "certify", {"enabled", "samples", "seed", "n_max", "mu", "lambda", "phi",
                                   "M", "M_star", "f"})
    seed = c.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise r.error("certify.seed", f"expected an unsigned 64-bit integer, got {seed!r}")
    cert = CertifySettings(
        enabled=r.boolean(c, "enabled", "certify", False),
        samples=r.integer(c, "samples", "certify", 2000, minimum=2),
        seed=seed if seed_override is None else seed_override,
        n_max=r.integer(c, "n_max", "certify", 10),
        mu=_summable(r, c.get("mu"), "certify.mu"),
        lam=_summable(r, c.get("lambda"), "certify.lambda"),
        phi=_phi(r, c.get("phi"), "certify.phi", PhiSpec()),
        m_const=None if c.get("M") is None else r.number(c, "M", "certify", positive=True),
        m_star=r.number(c, "M_star", "certify", default=1.0, positive=True),
        f=_phi(r, c.get("f"), "certify.f", PhiSpec.linear(0.25)),
    )

    o = r.section(doc, "output", {"dir", "emit_csv", "emit_svg"})
    out_dir = o.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise r.error("output.dir", f"expected a directory path, got {out_dir!r}")
    output = OutputSettings(out_dir, r.boolean(o, "emit_csv", "output", True),
                            r.boolean(o, "emit_svg", "output", True))
    return ExperimentConfig(domain, pair, schemes, fixed, cert, output, is_list)


def load_config(path, seed_override: Optional[int] = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("", f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          None if mark is None else mark.line + 1) from None
    return parse_config(doc, _line_index(text), seed_override)
