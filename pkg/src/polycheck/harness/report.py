"""Report emission: JSON-lines records or an aligned text table."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable

from .experiments import Report

TABLE_ROW_LIMIT = 20


_ENCODER = json.JSONEncoder(sort_keys=True, separators=(",", ":"))


def _dumps(obj: dict[str, Any]) -> str:
    return _ENCODER.encode(obj)


def machine_lines(report: Report) -> list[str]:
    """Header, one line per record, then the summary. Timings are left out."""
    lines = [_dumps({"record": "header", "mode": report.mode, "seed": report.seed, "config": report.config})]
    for rec in report.records:
        lines.append(_dumps({"record": "trial", **rec}))
    if report.summary:
        lines.append(_dumps({"record": "summary", **report.summary}))
    return lines


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, dict)):
        return json.dumps(v, separators=(",", ":"))
    return str(v)


def _table(rows: Iterable[dict[str, Any]]) -> list[str]:
    rows = list(rows)
    if not rows:
        return []
    cols = list(rows[0])
    cells = [[_fmt(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    out = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    out.append("  ".join("-" * w for w in widths))
    out.extend("  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells)
    return out


def bound_line(report: Report) -> str | None:
    s = report.summary
    if "bound" not in s or s.get("estimate", s.get("completeness")) is None:
        return None
    if "ci_low" in s:
        verdict = "VIOLATED" if s["bound_violated"] else "ok"
        return (f"empirical {s['estimate']:.6g} "
                f"({s['confidence']:.0%} Wilson CI [{s['ci_low']:.6g}, {s['ci_high']:.6g}]) "
                f"vs theoretical bound {s['bound']:.6g}: {verdict}")
    verdict = "VIOLATED" if s["bound_violated"] else "ok"
    return f"completeness {s['completeness']:.6g} vs expected {s['bound']:.6g}: {verdict}"


def human_lines(report: Report) -> list[str]:
    lines = [f"mode={report.mode} seed={report.seed} records={len(report.records)}"]
    shown = report.records[:TABLE_ROW_LIMIT]
    lines.extend(_table(shown))
    if len(report.records) > len(shown):
        lines.append(f"... {len(report.records) - len(shown)} more records")
    if report.summary:
        lines.append("")
        lines.extend(_table({"key": k, "value": v} for k, v in report.summary.items()))
    line = bound_line(report)
    if line:
        lines.append(line)
    for k, v in report.timings.items():
        lines.append(f"{k}: {v:.3f}")
    return lines


def render(report: Report, fmt: str = "records") -> str:
    if fmt == "records":
        lines = machine_lines(report)
    elif fmt == "table":
        lines = human_lines(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, path: str | Path, fmt: str = "records") -> Path:
    """Write atomically: the target appears only once fully written."""
    path = Path(path)
    text = render(report, fmt)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
