"""File formats written by the command line tool.

All floats are written as the shortest decimal that round-trips to the same
64-bit value (Python ``repr``), so outputs are bitwise reproducible.  Vector
cells join coordinates with ``;``.  Missing values are empty cells.

trace.csv
    header ``n,x,y,r1,r2,dist_p,power_gap,step_delta``; one row per iteration,
    then one trailing comment row ``# terminal=<reason>``.
certify.csv
    header ``check_name,n,margin_or_estimate,worst_x,worst_y,verdict``;
    ``verdict`` is ``pass`` or ``fail``.
summary.csv
    header ``scheme,iterations,terminal_reason,final_r_max,rate_rho``.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

TRACE_HEADER = ["n", "x", "y", "r1", "r2", "dist_p", "power_gap", "step_delta"]
CERTIFY_HEADER = ["check_name", "n", "margin_or_estimate", "worst_x", "worst_y", "verdict"]
SUMMARY_HEADER = ["scheme", "iterations", "terminal_reason", "final_r_max", "rate_rho"]

TERMINAL_REASONS = {"tol-reached", "max-iter", "stagnation"}
SUMMARY_REASONS = TERMINAL_REASONS | {"numerical-failure", "domain-violation", "invalid-input"}


def fmt_float(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    return repr(v)


def fmt_vec(v) -> str:
    if v is None:
        return ""
    return ";".join(repr(float(c)) for c in np.atleast_1d(v))


def _write(path: Path, header, rows, trailer=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if trailer:
        buf.write(trailer + "\n")
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_trace_csv(trace, path) -> Path:
    path = Path(path)
    rows = [[str(r.n), fmt_vec(r.x), fmt_vec(r.y), fmt_float(r.r1), fmt_float(r.r2),
             fmt_float(r.dist_p), fmt_float(r.power_gap), fmt_float(r.step_delta)]
            for r in trace.rows]
    _write(path, TRACE_HEADER, rows, f"# terminal={trace.terminal}")
    return path


def write_certify_csv(rows, path) -> Path:
    """``rows``: iterable of (check_name, n, value, worst_x, worst_y, passed)."""
    path = Path(path)
    out = [[name, "" if n is None else str(n), fmt_float(value), fmt_vec(wx), fmt_vec(wy),
            "pass" if ok else "fail"] for name, n, value, wx, wy, ok in rows]
    _write(path, CERTIFY_HEADER, out)
    return path


def write_summary_csv(rows, path) -> Path:
    """``rows``: iterable of (scheme, iterations, terminal_reason, final_r_max, rate_rho)."""
    path = Path(path)
    out = [[s, "" if it is None else str(it), reason, fmt_float(rmax), fmt_float(rho)]
           for s, it, reason, rmax, rho in rows]
    _write(path, SUMMARY_HEADER, out)
    return path


# -- SVG ---------------------------------------------------------------------

_W, _H = 800, 600
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 20, 30, 50
_SERIES = (("r1", "#1f77b4"), ("r2", "#d62728"), ("dist_p", "#2ca02c"))


def write_trace_svg(trace, path) -> Path:
    """800x600 line chart of log10(r1), log10(r2) and log10(dist_p) against n.

    Non-positive values have no logarithm; they break the line.
    """
    path = Path(path)
    n = trace.column("n")
    series = []
    for name, color in _SERIES:
        v = trace.column(name)
        with np.errstate(divide="ignore", invalid="ignore"):
            lv = np.where(v > 0, np.log10(v), np.nan)
        series.append((name, color, lv))
    finite = np.concatenate([s[2][np.isfinite(s[2])] for s in series])
    ymin, ymax = (float(np.floor(finite.min())), float(np.ceil(finite.max()))) if finite.size else (-1.0, 0.0)
    if ymax <= ymin:
        ymax = ymin + 1.0
    xmin, xmax = (float(n.min()), float(n.max())) if n.size else (0.0, 1.0)
    if xmax <= xmin:
        xmax = xmin + 1.0
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x):
        return _LEFT + (x - xmin) / (xmax - xmin) * pw

    def py(y):
        return _TOP + (ymax - y) / (ymax - ymin) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
           f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
           f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    step = max(1, int(math.ceil((ymax - ymin) / 10)))
    for y in np.arange(ymin, ymax + 0.5, step):
        out.append(f'<line x1="{_LEFT - 5}" y1="{py(y):.2f}" x2="{_LEFT}" y2="{py(y):.2f}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{py(y) + 4:.2f}" font-size="11" text-anchor="end">1e{int(y)}</text>')
    for x in (xmin, (xmin + xmax) / 2, xmax):
        out.append(f'<text x="{px(x):.2f}" y="{_H - _BOTTOM + 18}" font-size="11" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{_LEFT + pw / 2:.2f}" y="{_H - 10}" font-size="12" text-anchor="middle">n</text>')
    for i, (name, color, lv) in enumerate(series):
        segment = []
        for xv, yv in zip(n, lv):
            if np.isfinite(yv):
                segment.append(f"{px(xv):.2f},{py(yv):.2f}")
            elif segment:
                out.append(_polyline(segment, color))
                segment = []
        if segment:
            out.append(_polyline(segment, color))
        out.append(f'<text x="{_LEFT + 10 + 90 * i}" y="{_TOP - 10}" font-size="12" fill="{color}">{name}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def _polyline(points, color):
    if len(points) == 1:
        x, y = points[0].split(",")
        return f'<circle cx="{x}" cy="{y}" r="2" fill="{color}"/>'
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(points)}"/>'


# -- validation --------------------------------------------------------------

class CsvFormatError(ValueError):
    pass


def _real(cell, where, allow_empty=True, nonneg=False):
    if cell == "":
        if allow_empty:
            return None
        raise CsvFormatError(f"{where}: value required")
    try:
        v = float(cell)
    except ValueError:
        raise CsvFormatError(f"{where}: not a number: {cell!r}") from None
    if not math.isfinite(v):
        raise CsvFormatError(f"{where}: non-finite value {cell!r}")
    if nonneg and v < 0:
        raise CsvFormatError(f"{where}: negative value {cell!r}")
    if repr(v) != cell:
        raise CsvFormatError(f"{where}: {cell!r} is not in shortest round-trip form")
    return v


def _vec(cell, where, allow_empty=True, dim=None):
    if cell == "":
        if allow_empty:
            return None
        raise CsvFormatError(f"{where}: vector required")
    coords = [_real(c, where, allow_empty=False) for c in cell.split(";")]
    if dim is not None and len(coords) != dim:
        raise CsvFormatError(f"{where}: expected {dim} coordinates, got {len(coords)}")
    return coords


def _validate_trace(rows, lines):
    if not lines or not lines[-1].startswith("# terminal="):
        raise CsvFormatError("trace must end with a '# terminal=<reason>' row")
    reason = lines[-1][len("# terminal="):]
    if reason not in TERMINAL_REASONS:
        raise CsvFormatError(f"unknown terminal reason {reason!r}")
    if not rows:
        raise CsvFormatError("trace has no iteration rows")
    dim = None
    for i, row in enumerate(rows, start=1):
        where = f"row {i + 1}"
        if len(row) != len(TRACE_HEADER):
            raise CsvFormatError(f"{where}: expected {len(TRACE_HEADER)} fields, got {len(row)}")
        if row[0] != str(i):
            raise CsvFormatError(f"{where}: n must be {i}, got {row[0]!r}")
        x = _vec(row[1], f"{where} x", allow_empty=False, dim=dim)
        dim = len(x)
        _vec(row[2], f"{where} y", dim=dim)
        for k in range(3, 8):
            _real(row[k], f"{where} {TRACE_HEADER[k]}", allow_empty=k >= 5, nonneg=True)
    return f"trace: {len(rows)} rows, terminal={reason}"


def _validate_certify(rows, lines):
    for i, row in enumerate(rows, start=2):
        where = f"row {i}"
        if len(row) != len(CERTIFY_HEADER):
            raise CsvFormatError(f"{where}: expected {len(CERTIFY_HEADER)} fields, got {len(row)}")
        if not row[0]:
            raise CsvFormatError(f"{where}: empty check name")
        if row[1] and not row[1].isdigit():
            raise CsvFormatError(f"{where}: n must be a positive integer or empty")
        _real(row[2], f"{where} margin_or_estimate", allow_empty=False)
        _vec(row[3], f"{where} worst_x")
        _vec(row[4], f"{where} worst_y")
        if row[5] not in ("pass", "fail"):
            raise CsvFormatError(f"{where}: verdict must be pass or fail, got {row[5]!r}")
    fails = sum(r[5] == "fail" for r in rows)
    return f"certify: {len(rows)} rows, {fails} fail"


def _validate_summary(rows, lines):
    for i, row in enumerate(rows, start=2):
        where = f"row {i}"
        if len(row) != len(SUMMARY_HEADER):
            raise CsvFormatError(f"{where}: expected {len(SUMMARY_HEADER)} fields, got {len(row)}")
        if row[0] not in ("paper_b", "mann", "ishikawa"):
            raise CsvFormatError(f"{where}: unknown scheme {row[0]!r}")
        if row[1] and not row[1].isdigit():
            raise CsvFormatError(f"{where}: iterations must be a nonnegative integer or empty")
        if row[2] not in SUMMARY_REASONS:
            raise CsvFormatError(f"{where}: unknown terminal reason {row[2]!r}")
        _real(row[3], f"{where} final_r_max", nonneg=True)
        _real(row[4], f"{where} rate_rho", nonneg=True)
    return f"summary: {len(rows)} rows"


_VALIDATORS = {
    tuple(TRACE_HEADER): _validate_trace,
    tuple(CERTIFY_HEADER): _validate_certify,
    tuple(SUMMARY_HEADER): _validate_summary,
}


def validate_csv(path) -> str:
    """Re-read one of the tool's CSV files and check it against its schema.

    Returns a one-line description; raises :class:`CsvFormatError`.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise CsvFormatError("empty file")
    header = lines[0].split(",")
    validator = _VALIDATORS.get(tuple(header))
    if validator is None:
        raise CsvFormatError(f"unrecognized header {lines[0]!r}")
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    comments = [ln for ln in lines[1:] if ln.startswith("#")]
    if validator is not _validate_trace and comments:
        raise CsvFormatError("comment rows are only allowed in traces")
    if validator is _validate_trace and (len(comments) != 1 or not lines[-1].startswith("#")):
        raise CsvFormatError("trace needs exactly one trailing comment row")
    rows = list(csv.reader(body))
    return validator(rows, lines)
