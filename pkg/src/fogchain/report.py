"""Report rendering: delimited output plus figures.

JSON is the canonical form (stable bytes for a given report). CSV is one
row per operation kind for spreadsheet work. Figures go straight to PNG
files through the Agg backend; nothing here ever opens a window.
"""

import csv
import io
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .canonical import canonical_str

CSV_COLUMNS = ("op_kind", "count", "avg_gas", "min_gas", "max_gas",
               "avg_cost_usd", "avg_confirm_ms")

# report sections measured on the wall clock, hence not seed-stable
WALL_CLOCK_FIELDS = ("read_latency_ms",)


def strip_wall_clock(report: dict) -> dict:
    """The report minus its timing sections: same bytes for same seed."""
    return {k: v for k, v in report.items() if k not in WALL_CLOCK_FIELDS}


def render_report_json(report: dict) -> str:
    return canonical_str(report) + "\n"


def render_report_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for op_kind in sorted(report["ops"]):
        row = report["ops"][op_kind]
        writer.writerow([
            op_kind, row["count"], row["avg_gas"], row["min_gas"],
            row["max_gas"], f"{row['avg_cost_usd']:.6f}",
            "" if row["avg_confirm_ms"] is None else row["avg_confirm_ms"],
        ])
    return buf.getvalue()


def write_figures(report: dict, outdir) -> list:
    """Render the gas and latency charts, return the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ops = sorted(report["ops"])
    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    avg = [report["ops"][o]["avg_gas"] / 1000.0 for o in ops]
    lo = [(report["ops"][o]["avg_gas"] - report["ops"][o]["min_gas"]) / 1000.0
          for o in ops]
    hi = [(report["ops"][o]["max_gas"] - report["ops"][o]["avg_gas"]) / 1000.0
          for o in ops]
    ax.bar(ops, avg, yerr=[lo, hi], capsize=4, color="#4878a8")
    ax.set_ylabel("gas used (thousands)")
    ax.set_title(f"Gas per operation, {report['benchmark']}")
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    path = outdir / "gas_per_op.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    with_lat = [o for o in ops if report["ops"][o]["avg_confirm_ms"] is not None]
    if with_lat:
        fig, ax = plt.subplots(figsize=(8, 4.5))
        lat = [report["ops"][o]["avg_confirm_ms"] / 1000.0 for o in with_lat]
        ax.bar(with_lat, lat, color="#a85948")
        ax.set_ylabel("confirmation latency (s, simulated)")
        ax.set_title(f"Submit-to-block latency, {report['benchmark']}")
        ax.tick_params(axis="x", rotation=20)
        fig.tight_layout()
        path = outdir / "confirm_latency.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
