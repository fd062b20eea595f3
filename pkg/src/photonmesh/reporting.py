"""Report rendering: delimited outputs plus matplotlib figures written next
to them. All figure paths are returned so callers can log them."""

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .experiment import histogram


def write_histogram_csv(report, bin_width, path):
    bins = histogram(report, bin_width)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for left, count in bins:
            writer.writerow([repr(left), repr(left + bin_width), count])
    return bins


def render_fidelity_histogram(report, bin_width, path):
    """Bar chart of the fidelity distribution of one benchmark run."""
    bins = histogram(report, bin_width)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(
        [left + bin_width / 2 for left, _ in bins],
        [count for _, count in bins],
        width=bin_width * 0.92,
        color="#3465a4",
    )
    ax.set_xlabel("amplitude fidelity")
    ax.set_ylabel("matrices")
    ax.set_title(
        f"n={report.n}, {report.count} matrices: "
        f"F = {report.mean:.3f} ± {report.std:.3f}"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_insertion_loss_csv(loss_db, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "insertion_loss_db"])
        for mode, db in enumerate(loss_db):
            writer.writerow([mode, repr(float(db))])


def render_insertion_loss(loss_db, path):
    """Per-mode insertion-loss bar chart with the across-mode average."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    modes = list(range(len(loss_db)))
    ax.bar(modes, loss_db, color="#73d216")
    mean = sum(loss_db) / len(loss_db)
    ax.axhline(mean, color="k", linestyle="--", linewidth=1, label=f"mean {mean:.2f} dB")
    ax.set_xlabel("mode")
    ax.set_ylabel("insertion loss (dB)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
