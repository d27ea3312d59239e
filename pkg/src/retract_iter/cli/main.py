"""``retract-iter`` command line entry point.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 certification
failure (``certify --strict`` only).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .. import certify as cert
from ..diagnostics import rate_estimate
from ..errors import DomainViolationError, InvalidInputError, NumericalError, RetractIterError
from ..iterate import IterTrace, compare_schemes, run_scheme
from ..mappings import apply
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .output import (CsvFormatError, validate_csv, write_certify_csv, write_summary_csv,
                     write_trace_csv, write_trace_svg)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CERTIFY = 0, 1, 2, 3
SEED_ENV = "RETRACT_ITER_SEED"


def _err(msg):
    print(f"retract-iter: {msg}", file=sys.stderr)


def _seed_override():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(SEED_ENV, f"expected an unsigned integer, got {raw!r}") from None
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(SEED_ENV, f"seed out of the unsigned 64-bit range: {seed}")
    return seed


def _out_dir(cfg: ExperimentConfig, override) -> Path:
    d = Path(override if override else cfg.output.dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _emit_trace(trace: IterTrace, cfg: ExperimentConfig, out: Path, stem="trace"):
    written = []
    if cfg.output.emit_csv:
        written.append(write_trace_csv(trace, out / f"{stem}.csv"))
    if cfg.output.emit_svg:
        written.append(write_trace_svg(trace, out / f"{stem}.svg"))
    return written


def _failure_reason(exc) -> str:
    if isinstance(exc, NumericalError):
        return "numerical-failure"
    if isinstance(exc, DomainViolationError):
        return "domain-violation"
    return "invalid-input"


def _failure_code(exc) -> int:
    return EXIT_CONFIG if isinstance(exc, (InvalidInputError, ConfigError)) else EXIT_NUMERICAL


# -- certification -----------------------------------------------------------

def certification_rows(cfg: ExperimentConfig):
    """Run every applicable check; returns (rows for certify.csv, kn estimates)."""
    c = cfg.certify
    pair, dom = cfg.pair, cfg.domain
    samples = cert.SampleSpec(c.samples, c.seed, dom)
    rows, kn = [], {}

    if pair.p.kind == "identity":
        # Identity is a retraction only on K itself; check it there and check
        # that both mappings keep their values in K, which is all the scheme needs.
        ret = cert.check_retraction(pair.p, samples, enlarge=1.0)
        pts = samples.points()
        worst, wx = 0.0, None
        for m in (pair.t1, pair.t2):
            for x in pts:
                tx = apply(m, x)
                d = float(np.linalg.norm(tx - dom.project(tx)))
                if d > worst or wx is None:
                    worst, wx = d, x
        rows.append(("retraction.images_in_domain", None, worst, wx, None, worst <= cert.RETRACTION_TOL))
    else:
        ret = cert.check_retraction(pair.p, samples)
    rows += [(f"retraction.{r.label}", None, r.value, r.worst_x, r.worst_y, r.passed) for r in ret.rows]

    m_const = c.m_const if c.m_const is not None else dom.diameter()
    if np.isfinite(m_const) and m_const > 0:
        g = cert.check_phi_growth(c.phi, m_const, c.m_star)
        rows += [("phi_growth", None, r.value, r.worst_x, None, r.passed) for r in g.rows]

    for tag, m in (("t1", pair.t1), ("t2", pair.t2)):
        k = cert.estimate_kn(m, pair.p, samples, c.n_max)
        kn[tag] = k.per_n
        rows += [(f"kn.{tag}", r.n, r.value, r.worst_x, r.worst_y, r.passed) for r in k.rows]
        rows.append((f"lipschitz.{tag}", None, float(np.max(k.per_n)), None, None, True))
        t = cert.check_total(m, pair.p, c.mu, c.lam, c.phi, samples, c.n_max)
        rows += [(f"total.{tag}", r.n, r.value, r.worst_x, r.worst_y, r.passed) for r in t.rows]
        ch = cert.check_power_chain(m, pair.p, samples, c.n_max)
        rows += [(f"power_chain.{tag}", r.n, r.value, r.worst_x, r.worst_y, r.passed) for r in ch.rows]
        if dom.dim == 1 and hasattr(dom, "lo"):
            w = cert.check_weakly_inward_1d(m)
            rows.append((f"weakly_inward.{tag}", None, max(w.lo - w.t_lo, w.t_hi - w.hi),
                         np.array([w.t_lo]), np.array([w.t_hi]), w.passed))
        for ft in cert.check_fixed_transfer(m, pair.p, cfg.fixed_points):
            rows.append((f"fixed_transfer.{tag}", None, max(ft.pt_residual, ft.t_residual),
                         ft.x, None, ft.agree))

    if cfg.fixed_points:
        a = cert.check_condition_aprime(pair, c.f, cfg.fixed_points, samples)
        rows += [("condition_aprime", None, r.value, r.worst_x, None, r.passed) for r in a.rows]
    return rows, kn


# -- commands ----------------------------------------------------------------

def cmd_run(config_path, out=None) -> int:
    try:
        cfg = load_config(config_path)
        if cfg.scheme_is_list:
            raise ConfigError("scheme", "run takes a single scheme block; use compare for several")
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    out_dir = _out_dir(cfg, out)
    try:
        trace = run_scheme(cfg.scheme, cfg.pair, cfg.reference_p)
    except (NumericalError, DomainViolationError) as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    except InvalidInputError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    _emit_trace(trace, cfg, out_dir)
    last = trace.rows[-1]
    print(f"{cfg.scheme.scheme}: {len(trace)} iterations, terminal={trace.terminal}, "
          f"max residual={max(last.r1, last.r2):.3e}")
    return EXIT_OK


def cmd_certify(config_path, strict=False, out=None) -> int:
    try:
        cfg = load_config(config_path, seed_override=_seed_override())
        if not cfg.certify.enabled:
            raise ConfigError("certify.enabled", "certification is disabled in this config")
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    out_dir = _out_dir(cfg, out)
    try:
        rows, _ = certification_rows(cfg)
    except (NumericalError, DomainViolationError) as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    write_certify_csv(rows, out_dir / "certify.csv")
    fails = [r[0] for r in rows if not r[5]]
    print(f"certify: {len(rows)} checks, {len(fails)} fail (empirical, seed {cfg.certify.seed})")
    if fails:
        print("failed: " + ", ".join(sorted(set(fails))))
    return EXIT_CERTIFY if (strict and fails) else EXIT_OK


def cmd_compare(config_path, out=None) -> int:
    try:
        cfg = load_config(config_path)
        if not cfg.scheme_is_list or len(cfg.schemes) < 2:
            raise ConfigError("scheme", "compare needs a list of at least two scheme blocks")
        x1s = {tuple(s.x1.tolist()) for s in cfg.schemes}
        if len(x1s) != 1:
            raise ConfigError("scheme", "all scheme blocks must share the same x1")
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    out_dir = _out_dir(cfg, out)
    summary, code = [], EXIT_OK
    for i, outcome in enumerate(compare_schemes(cfg.schemes, cfg.pair, cfg.reference_p), start=1):
        name = outcome.config.scheme
        if not outcome.ok:
            _err(f"scheme[{i - 1}] ({name}) failed: {outcome.error}")
            summary.append((name, None, _failure_reason(outcome.error), None, None))
            code = max(code, _failure_code(outcome.error))
            continue
        trace = outcome.trace
        _emit_trace(trace, cfg, out_dir, stem=f"trace_{i}_{name}")
        last = trace.rows[-1]
        try:
            rho = rate_estimate(trace).rho
        except InvalidInputError:
            rho = None
        summary.append((name, len(trace), trace.terminal, max(last.r1, last.r2), rho))
    write_summary_csv(summary, out_dir / "summary.csv")
    for s in summary:
        print(f"{s[0]:>9}: iterations={s[1]}, terminal={s[2]}")
    return code


DEMO_CONFIG = {
    "space": {"dim": 1, "norm": "euclidean"},
    "domain": {"kind": "interval", "lo": -1.0, "hi": 1.0},
    "mappings": {"t1": {"builtin": "paper_t1"}, "t2": {"builtin": "paper_t2"},
                 "retraction": {"kind": "identity"}, "fixed_points": [[0.0]]},
    "scheme": {"kind": "paper_b", "alpha": 0.5, "beta": 0.5, "x1": 1.0,
               "max_iter": 500, "residual_tol": 1e-8},
    "certify": {"enabled": True, "samples": 2000, "seed": 12345, "n_max": 10},
    "output": {"dir": "demo_out", "emit_csv": True, "emit_svg": True},
}


def cmd_demo(out=None) -> int:
    cfg = parse_config(DEMO_CONFIG)
    out_dir = _out_dir(cfg, out)
    trace = run_scheme(cfg.scheme, cfg.pair, cfg.reference_p)
    _emit_trace(trace, cfg, out_dir)
    rows, kn = certification_rows(cfg)
    write_certify_csv(rows, out_dir / "certify.csv")
    fails = sorted({r[0] for r in rows if not r[5]})

    xN = float(abs(trace.final[0]))
    print("Two-mapping iteration on [-1, 1], T1 = -2 sin(|x|/2), T2 = |x|, P = identity, F = {0}")
    print("  alpha = beta = 0.5, x1 = 1, tol = 1e-8")
    print(f"  terminal: {trace.terminal} after N = {len(trace)} iterations, |x_N| = {xN!r}")
    for tag in ("t1", "t2"):
        print(f"  k_n estimates ({tag}): " + " ".join(f"{v:.6f}" for v in kn[tag]))
    print(f"  certification: {len(rows)} checks, {len(fails)} fail (empirical)")
    if fails:
        print("  failed: " + ", ".join(fails))
    print(f"  files: {out_dir / 'trace.csv'}, {out_dir / 'trace.svg'}, {out_dir / 'certify.csv'}")
    ok = trace.terminal == "tol-reached" and xN < 1e-8 and not fails
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_validate(csv_path) -> int:
    try:
        print(validate_csv(csv_path))
    except (CsvFormatError, OSError) as exc:
        _err(f"invalid: {exc}")
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retract-iter",
                                     description="Fixed-point iteration for nonself mappings under retractions.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one scheme and write trace.csv / trace.svg")
    p.add_argument("config")
    p.add_argument("--out", metavar="DIR")
    p = sub.add_parser("certify", help="empirical checks of the mapping-class inequalities")
    p.add_argument("config")
    p.add_argument("--strict", action="store_true", help="exit 3 if any check fails")
    p.add_argument("--out", metavar="DIR")
    p = sub.add_parser("compare", help="run several scheme blocks and write summary.csv")
    p.add_argument("config")
    p.add_argument("--out", metavar="DIR")
    p = sub.add_parser("demo", help="the built-in two-map example on [-1, 1]")
    p.add_argument("--out", metavar="DIR")
    p = sub.add_parser("validate", help="re-validate a CSV written by this tool")
    p.add_argument("csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out)
        if args.command == "certify":
            return cmd_certify(args.config, args.strict, args.out)
        if args.command == "compare":
            return cmd_compare(args.config, args.out)
        if args.command == "demo":
            return cmd_demo(args.out)
        return cmd_validate(args.csv)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except RetractIterError as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
