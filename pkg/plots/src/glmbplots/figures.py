"""Batch figure rendering from tracker run outputs.

Each renderer takes input paths and an output image path, reads only the
published CSV/JSON schemas, and writes a single figure.  Styling is
pinned (Agg backend, fixed rc values, label-keyed colors) so identical
inputs reproduce identical images.
"""

import hashlib
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import schemas

FIGURE_KINDS = ("ospa_curve", "tracks_xy_t", "speedup_table", "cardinality")

_RC = {
    "figure.figsize": (8.0, 5.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "glmb-plots",
}

_PALETTE = plt.get_cmap("tab20").colors


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"figure kind must be one of {FIGURE_KINDS}")
        if not self.inputs:
            raise ValueError("at least one input file is required")


def label_color(label):
    """Stable per-label color: hash of the label string into the palette."""
    digest = hashlib.blake2b(str(label).encode(), digest_size=4).digest()
    return _PALETTE[int.from_bytes(digest, "little") % len(_PALETTE)]


def _save(fig, output):
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Software": "glmb-plots"})
    plt.close(fig)
    return out


def render_ospa_curve(inputs, output):
    """Error-vs-time curves; several summaries overlay as one series each."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for path in inputs:
            if str(path).endswith(".json"):
                doc = schemas.read_summary_json(path)
                curve = doc["mean_ospa"]
                scans = np.arange(1, len(curve) + 1)
                name = f"{doc['solver']} (mean of {doc['trials']})"
            else:
                table = schemas.read_ospa_csv(path)
                scans, curve = table["scan"], table["ospa"]
                name = Path(path).parent.name or Path(path).stem
            ax.plot(scans, curve, label=name, linewidth=1.4)
        ax.set_xlabel("scan")
        ax.set_ylabel("OSPA distance (m)")
        ax.set_title("OSPA error over time")
        ax.legend()
        return _save(fig, output)


def render_cardinality(inputs, output):
    """True vs estimated object counts over time."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        first = True
        for path in inputs:
            if str(path).endswith(".json"):
                doc = schemas.read_summary_json(path)
                if "true_n" not in doc or "mean_est_n" not in doc:
                    raise schemas.SchemaError(f"{path}: missing column 'mean_est_n'")
                scans = np.arange(1, len(doc["true_n"]) + 1)
                truth, est = doc["true_n"], doc["mean_est_n"]
                name = f"{doc['solver']} estimate"
            else:
                table = schemas.read_cardinality_csv(path)
                scans, truth, est = table["scan"], table["true_n"], table["est_n"]
                name = "estimate"
            if first:
                ax.step(scans, truth, where="mid", color="black", label="truth")
                first = False
            ax.plot(scans, est, label=name, linewidth=1.2)
        ax.set_xlabel("scan")
        ax.set_ylabel("object count")
        ax.set_title("Cardinality over time")
        ax.legend()
        return _save(fig, output)


def render_tracks_xy_t(inputs, output):
    """Track overlay: truth lines, estimate dots keyed by label, measurements.

    Inputs: tracks.csv, truth.csv, and optionally measurements.csv; the
    two panels show each position coordinate against time.
    """
    tracks_path = truth_path = meas_path = None
    for path in inputs:
        name = Path(path).name
        if name.startswith("tracks"):
            tracks_path = path
        elif name.startswith("truth"):
            truth_path = path
        elif name.startswith("measurements"):
            meas_path = path
    if tracks_path is None or truth_path is None:
        raise schemas.SchemaError("need tracks.csv and truth.csv inputs")

    tracks = schemas.read_state_csv(tracks_path)
    truth = schemas.read_state_csv(truth_path)
    pos_idx = (0, 2)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8.0, 6.5))
        if meas_path is not None:
            meas = schemas.read_measurements_csv(meas_path)
            for axis, coord in zip(axes, range(2)):
                xs = [scan for scan, _, z in meas]
                ys = [z[coord] for _, _, z in meas]
                axis.scatter(xs, ys, s=2, color="0.75", label="measurements")
        for label, rows in sorted(truth.items()):
            for axis, coord in zip(axes, pos_idx):
                axis.plot(
                    [scan for scan, _ in rows],
                    [x[coord] for _, x in rows],
                    color="black",
                    linewidth=1.0,
                )
        for label, rows in sorted(tracks.items()):
            color = label_color(label)
            for axis, coord in zip(axes, pos_idx):
                axis.scatter(
                    [scan for scan, _ in rows],
                    [x[coord] for _, x in rows],
                    s=6,
                    color=color,
                )
        axes[0].set_ylabel("x (m)")
        axes[1].set_ylabel("y (m)")
        axes[1].set_xlabel("scan")
        axes[0].set_title("Track estimates, truth and measurements")
        return _save(fig, output)


def render_speedup_table(inputs, output):
    """Runtime comparison across run summaries as a rendered table."""
    docs = [schemas.read_summary_json(p) for p in inputs]
    for doc, path in zip(docs, inputs):
        if "mean_runtime_s" not in doc or "mean_solver_time_s" not in doc:
            raise schemas.SchemaError(f"{path}: missing column 'mean_runtime_s'")
    base = max(docs, key=lambda d: d["mean_solver_time_s"])
    headers = ["run", "trials", "runtime (s)", "solver time (s)", "speedup"]
    rows = []
    for doc in docs:
        rows.append(
            [
                f"{doc['solver']}/{doc.get('scenario', '?')}/H={doc.get('h_max', '?')}",
                str(doc["trials"]),
                f"{doc['mean_runtime_s']:.2f}",
                f"{doc['mean_solver_time_s']:.2f}",
                f"{base['mean_solver_time_s'] / doc['mean_solver_time_s']:.1f}x",
            ]
        )
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(8.0, 1.0 + 0.5 * len(rows)))
        ax.axis("off")
        table = ax.table(cellText=rows, colLabels=headers, loc="center")
        table.scale(1.0, 1.4)
        ax.set_title("Solver runtime comparison")
        return _save(fig, output)


RENDERERS = {
    "ospa_curve": render_ospa_curve,
    "tracks_xy_t": render_tracks_xy_t,
    "speedup_table": render_speedup_table,
    "cardinality": render_cardinality,
}


def render(spec):
    """Dispatch a FigureSpec to its renderer; returns the written path."""
    for path in spec.inputs:
        if not Path(path).exists():
            raise schemas.SchemaError(f"{path}: input file does not exist")
    return RENDERERS[spec.kind](tuple(spec.inputs), spec.output)
