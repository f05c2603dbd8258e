"""Structured run reports with JSON / CSV / plain-table renderers.

A report is assembled as plain data first so that identical inputs produce
byte-identical output, except for the wall-clock timestamp which is attached
only at render time (and can be suppressed for comparisons).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .stream import Stream

SCHEMA_VERSION = 1


def dataset_digest(stream: Stream) -> str:
    """SHA-256 of the dataset in canonical CSV form (repr floats, LF lines)."""
    lines = []
    for i in range(len(stream)):
        ex = stream[i]
        lines.append(f"{ex.label}," + ",".join(repr(float(v)) for v in ex.features))
    blob = ("\n".join(lines) + "\n").encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class ReportDocument:
    command: str
    seed: int | None = None
    config: dict = field(default_factory=dict)
    dataset: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)
    bounds: list = field(default_factory=list)
    selection: dict | None = None
    generalization: list = field(default_factory=list)
    coverage: dict | None = None

    def to_dict(self, timestamp: bool = True) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "seed": self.seed,
            "config": _jsonable(self.config),
            "dataset": _jsonable(self.dataset),
            "trace": _jsonable(self.trace),
            "bounds": _jsonable(self.bounds),
        }
        if self.selection is not None:
            doc["selection"] = _jsonable(self.selection)
        if self.generalization:
            doc["generalization"] = _jsonable(self.generalization)
        if self.coverage is not None:
            doc["coverage"] = _jsonable(self.coverage)
        if timestamp:
            doc["generated_at"] = datetime.now(timezone.utc).isoformat()
        return doc

    def to_json(self, timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(timestamp=timestamp), indent=2, sort_keys=False)

    def to_csv(self) -> str:
        """Bound rows as CSV (one line per evaluated bound)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bound_name", "value", "mistakes", "valid", "scale"])
        for row in self.bounds:
            writer.writerow([
                row.get("bound_name", ""),
                row.get("value", ""),
                row.get("mistakes", ""),
                row.get("valid", ""),
                row.get("scale", ""),
            ])
        return buf.getvalue()

    def to_table(self) -> str:
        out = []
        ds = self.dataset
        if ds:
            out.append(f"dataset: {ds.get('source', '?')}  "
                       f"T={ds.get('count', '?')}  dim={ds.get('dim', '?')}")
        tr = self.trace
        if tr:
            out.append(f"trace:   mistakes={tr.get('mistake_count', '?')}  "
                       f"radius={_fmt(tr.get('radius'))}  "
                       f"sq_norm_sum={_fmt(tr.get('sq_norm_sum'))}")
        if self.bounds:
            out.append("")
            out.append(f"{'bound':<18} {'value':>14} {'mistakes':>9} {'valid':>6}")
            for row in self.bounds:
                out.append(f"{row['bound_name']:<18} {_fmt(row['value']):>14} "
                           f"{row['mistakes']:>9} {str(row['valid']):>6}")
        if self.selection is not None:
            sel = self.selection
            out.append("")
            out.append(f"selection: round={sel['chosen_index']}  "
                       f"suffix_risk={_fmt(sel['suffix_risk'])}  "
                       f"penalty={_fmt(sel['penalty'])}")
        for gen in self.generalization:
            out.append(f"generalization[{gen['bound_name']}]: rhs={_fmt(gen['rhs'])}  "
                       f"online_loss={_fmt(gen['empirical_online_loss'])}")
        if self.coverage is not None:
            cov = self.coverage
            out.append(f"coverage: trials={cov['trials']}  "
                       f"violation_fraction={_fmt(cov['violation_fraction'])}")
        return "\n".join(out) + "\n"


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
