"""Delimited-text tables and JSON result documents.

Table layout (one header block, then comma-separated rows)::

    # sivtwin-table 1
    # kind: spectrum
    # columns: detuning[Hz], rate[counts/s], sigma[counts/s]
    # meta: {"seed": 0, ...}
    # pulse: 0 80 nan
    -2e8,1203.0,34.6
    ...

Floats are written with ``repr`` so every value re-parses bit-identically.
``pulse`` lines carry (first bin, stop bin, dark time before the pulse) for
fluorescence traces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics.correlation import CorrelationTrace
from .dynamics.ple import Spectrum
from .spin import FluorescenceTrace

MAGIC = "sivtwin-table 1"
MONOTONE_KINDS = {"spectrum", "g2", "fluorescence"}


@dataclass
class Table:
    kind: str
    columns: list  # (name, unit) pairs
    data: np.ndarray  # rows x columns
    metadata: dict = field(default_factory=dict)
    pulses: list = field(default_factory=list)  # (start, stop, wait_before)

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.size == 0:
            self.data = self.data.reshape(0, len(self.columns))
        if self.data.shape[1] != len(self.columns):
            raise ValueError(f"{self.data.shape[1]} data columns for {len(self.columns)} headers")
        if self.kind in MONOTONE_KINDS and np.any(np.diff(self.data[:, 0]) <= 0):
            raise ValueError(f"abscissa of a {self.kind} table must be strictly increasing")

    def column(self, name: str) -> np.ndarray:
        names = [c[0] for c in self.columns]
        return self.data[:, names.index(name)]


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    # JSON has no inf/nan; encode them as strings so documents stay standard
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps_document(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True, default=_json_default) + "\n"


def write_document(path, doc: dict) -> Path:
    path = Path(path)
    path.write_text(dumps_document(doc))
    return path


def read_document(path) -> dict:
    return json.loads(Path(path).read_text())


def _fmt(v: float) -> str:
    return repr(float(v))


def emit_table(table: Table) -> str:
    cols = ", ".join(f"{n}[{u}]" for n, u in table.columns)
    lines = [f"# {MAGIC}", f"# kind: {table.kind}", f"# columns: {cols}"]
    if table.metadata:
        lines.append("# meta: " + json.dumps(_clean(table.metadata), sort_keys=True, default=_json_default))
    for start, stop, wait in table.pulses:
        lines.append(f"# pulse: {int(start)} {int(stop)} {_fmt(wait)}")
    lines.extend(",".join(_fmt(v) for v in row) for row in table.data)
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> Table:
    kind, columns, meta, pulses, rows = None, None, {}, [], []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, value = body.partition(":")
            key = key.strip()
            if key == "kind":
                kind = value.strip()
            elif key == "columns":
                columns = []
                for item in value.split(","):
                    name, _, unit = item.strip().partition("[")
                    columns.append((name.strip(), unit.rstrip("]")))
            elif key == "meta":
                meta = json.loads(value)
            elif key == "pulse":
                a, b, w = value.split()
                pulses.append((int(a), int(b), float(w)))
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError:
            raise ValueError(f"line {n}: non-numeric row {line!r}") from None
    if kind is None or columns is None:
        raise ValueError("missing '# kind:' or '# columns:' header")
    width = {len(r) for r in rows}
    if len(width) > 1:
        raise ValueError("rows have inconsistent column counts")
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(columns)))
    return Table(kind, columns, data, meta, pulses)


def write_table(path, table: Table, sidecar: bool = True) -> Path:
    """Write ``table`` and, optionally, its metadata as ``<name>.meta.json`` next to it."""
    path = Path(path)
    path.write_text(emit_table(table))
    if sidecar:
        write_document(path.with_suffix(".meta.json"), {"kind": table.kind, "columns": table.columns,
                                                        "metadata": table.metadata})
    return path


def read_table(path) -> Table:
    return parse_table(Path(path).read_text())


# conversions between simulation records and tables

def spectrum_to_table(spec: Spectrum, unit: str = "Hz") -> Table:
    meta = dict(spec.metadata, dwell_time=spec.dwell_time)
    return Table("spectrum", [("detuning", unit), ("rate", "counts/s"), ("sigma", "counts/s")],
                 np.column_stack([spec.abscissa, spec.values, spec.sigma]), meta)


def table_to_spectrum(table: Table) -> Spectrum:
    meta = dict(table.metadata)
    dwell = meta.pop("dwell_time", 1.0)
    return Spectrum(table.data[:, 0].copy(), table.data[:, 1].copy(), table.data[:, 2].copy(), dwell, meta)


def correlation_to_table(trace: CorrelationTrace) -> Table:
    sigma = trace.sigma if trace.sigma is not None else np.full(trace.tau.size, np.nan)
    return Table("g2", [("tau", "s"), ("g2", ""), ("sigma", "")],
                 np.column_stack([trace.tau, trace.g2, sigma]), dict(trace.metadata))


def table_to_correlation(table: Table) -> CorrelationTrace:
    sigma = table.data[:, 2].copy()
    return CorrelationTrace(table.data[:, 0].copy(), table.data[:, 1].copy(),
                            None if np.all(np.isnan(sigma)) else sigma, dict(table.metadata))


def fluorescence_to_table(trace: FluorescenceTrace) -> Table:
    meta = dict(trace.metadata, bin_width=trace.bin_width, repetitions=trace.repetitions, seed=trace.seed)
    pulses = [(a, b, w) for (a, b), w in zip(trace.pulse_bins, trace.waits_before)]
    data = np.column_stack([trace.time, trace.counts, np.sqrt(trace.counts), trace.expected])
    return Table("fluorescence", [("time", "s"), ("counts", "counts"), ("sigma", "counts"),
                                  ("expected", "counts")], data, meta, pulses)


def table_to_fluorescence(table: Table) -> FluorescenceTrace:
    meta = dict(table.metadata)
    width = meta.pop("bin_width")
    reps = meta.pop("repetitions", 1)
    seed = meta.pop("seed", None)
    d = table.data
    expected = d[:, 3].copy() if d.shape[1] > 3 else d[:, 1].copy()
    pulse_bins = [(a, b) for a, b, _ in table.pulses]
    waits = np.array([w for _, _, w in table.pulses], dtype=float)
    return FluorescenceTrace(d[:, 0].copy(), d[:, 1].copy(), expected, pulse_bins, waits, width, reps, seed, meta)


def transitions_to_table(fields, spectra, metadata: Optional[dict] = None) -> Table:
    """One row per field: offsets of C1..C4 [Hz] and their dipole strengths."""
    labels = [t.label for t in spectra[0].transitions]
    cols = [("field", "T")] + [(f"{l}_offset", "Hz") for l in labels] + [(f"{l}_strength", "") for l in labels]
    rows = [[b] + [t.offset for t in s.transitions] + [t.dipole_strength for t in s.transitions]
            for b, s in zip(fields, spectra)]
    return Table("transitions", cols, np.array(rows), dict(metadata or {}))
