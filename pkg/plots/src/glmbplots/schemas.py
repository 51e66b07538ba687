"""Readers for the tracker CLI's output files.

Every reader validates the column set it needs and raises SchemaError
naming the first offending column, so a schema drift in the producing
tool surfaces as a clear message rather than a plotting mishap.
"""

import csv
import json
from pathlib import Path

SUPPORTED_SCHEMA = 1


class SchemaError(ValueError):
    pass


def _read_csv(path, required):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing column '{col}'")
        idx = {col: header.index(col) for col in header}
        rows = [row for row in reader if row]
    return header, idx, rows


def read_ospa_csv(path):
    """Per-scan error rows: scan, ospa, ospa_loc, ospa_card."""
    _, idx, rows = _read_csv(path, ["scan", "ospa", "ospa_loc", "ospa_card"])
    return {
        "scan": [int(r[idx["scan"]]) for r in rows],
        "ospa": [float(r[idx["ospa"]]) for r in rows],
        "ospa_loc": [float(r[idx["ospa_loc"]]) for r in rows],
        "ospa_card": [float(r[idx["ospa_card"]]) for r in rows],
    }


def read_cardinality_csv(path):
    _, idx, rows = _read_csv(path, ["scan", "true_n", "est_n"])
    return {
        "scan": [int(r[idx["scan"]]) for r in rows],
        "true_n": [float(r[idx["true_n"]]) for r in rows],
        "est_n": [float(r[idx["est_n"]]) for r in rows],
    }


def read_state_csv(path):
    """tracks.csv / truth.csv: scan, label, s0..s{d-1}."""
    header, idx, rows = _read_csv(path, ["scan", "label", "s0"])
    state_cols = sorted(
        (c for c in header if c.startswith("s") and c[1:].isdigit()),
        key=lambda c: int(c[1:]),
    )
    out = {}
    for r in rows:
        label = r[idx["label"]]
        out.setdefault(label, []).append(
            (int(r[idx["scan"]]), [float(r[idx[c]]) for c in state_cols])
        )
    for label in out:
        out[label].sort(key=lambda item: item[0])
    return out


def read_measurements_csv(path):
    """measurements.csv: scan, source, z0..; source is a label or 'clutter'."""
    header, idx, rows = _read_csv(path, ["scan", "source", "z0"])
    z_cols = sorted(
        (c for c in header if c.startswith("z") and c[1:].isdigit()),
        key=lambda c: int(c[1:]),
    )
    return [
        (int(r[idx["scan"]]), r[idx["source"]], [float(r[idx[c]]) for c in z_cols])
        for r in rows
    ]


def read_summary_json(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SUPPORTED_SCHEMA:
        raise SchemaError(f"{path}: missing column 'schema' (or unsupported version)")
    for col in ("mean_ospa", "solver", "trials"):
        if col not in doc:
            raise SchemaError(f"{path}: missing column '{col}'")
    return doc


def read_timing_json(path):
    doc = json.loads(Path(path).read_text())
    for col in ("per_scan_solver_s", "total_solver_s", "total_s"):
        if col not in doc:
            raise SchemaError(f"{path}: missing column '{col}'")
    return doc


def write_ospa_csv(path, table):
    """Inverse of read_ospa_csv (used by the round-trip self-check)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scan", "ospa", "ospa_loc", "ospa_card"])
        for k in range(len(table["scan"])):
            writer.writerow(
                [
                    table["scan"][k],
                    repr(table["ospa"][k]),
                    repr(table["ospa_loc"][k]),
                    repr(table["ospa_card"][k]),
                ]
            )
