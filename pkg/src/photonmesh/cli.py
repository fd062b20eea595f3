"""Command-line interface.

Exit codes: 0 on success, 2 on validation errors (bad arguments or malformed
inputs), 3 on fit/data errors from calibration or measurement processing.
"""

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import calibration as cal
from .backend import SimulatedBackend
from .errors import DataError, FitError, ValidationError
from .experiment import run_haar_experiment
from .hardware import HardwareModel, ideal_model, measure_output, paper_model
from .linalg import haar_random_unitary, load_unitary, save_unitary, unitary_to_dict
from .mesh import MeshSettings, decompose, reconstruct
from .reporting import (
    render_fidelity_histogram,
    render_insertion_loss,
    write_histogram_csv,
    write_insertion_loss_csv,
)


def handle_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except (FitError, DataError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


@click.group()
def main():
    """Compiler and physics-faithful simulator for MZI-mesh photonic
    processors."""


@main.command()
@click.option("-n", "n", type=int, default=12, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("-o", "output", type=click.Path(), required=True)
@handle_errors
def haar(n, seed, output):
    """Sample a Haar-random unitary to a JSON file."""
    save_unitary(haar_random_unitary(n, seed), output)
    click.echo(f"wrote {n}×{n} unitary to {output}")


@main.command()
@click.option("-i", "input_path", type=click.Path(exists=True), required=True)
@click.option("-o", "output", type=click.Path(), required=True)
@click.option("--no-check", is_flag=True, help="Skip the unitarity check on input.")
@handle_errors
def compile(input_path, output, no_check):
    """Compile a unitary JSON into mesh settings JSON."""
    u = load_unitary(input_path, check=not no_check)
    settings = decompose(u)
    settings.save(output)
    click.echo(f"compiled {settings.n}-mode mesh ({len(settings.cells)} cells) to {output}")


@main.command("reconstruct")
@click.option("-i", "input_path", type=click.Path(exists=True), required=True)
@click.option("-o", "output", type=click.Path(), required=True)
@handle_errors
def reconstruct_cmd(input_path, output):
    """Multiply mesh settings JSON back into a unitary JSON."""
    settings = MeshSettings.load(input_path)
    save_unitary(reconstruct(settings), output)
    click.echo(f"reconstructed {settings.n}×{settings.n} unitary to {output}")


@main.command()
@click.argument("kind", type=click.Choice(["ideal", "paper"]))
@click.option("-n", "n", type=int, default=12, show_default=True, help="Modes (ideal only).")
@click.option("--seed", type=int, default=0, show_default=True, help="Draw seed (paper only).")
@click.option("-o", "output", type=click.Path(), required=True)
@handle_errors
def model(kind, n, seed, output):
    """Write an ideal or paper-matched hardware model JSON."""
    m = ideal_model(n) if kind == "ideal" else paper_model(seed)
    m.save(output)
    click.echo(f"wrote {kind} model (n={m.n}) to {output}")


@main.command()
@click.option("-m", "model_path", type=click.Path(exists=True), required=True)
@click.option("-s", "settings_path", type=click.Path(exists=True), required=True)
@click.option("--input", "input_mode", type=int, required=True)
@click.option("--power", type=float, default=1e-3, show_default=True, help="Input power (W).")
@click.option("--seed", type=int, default=None, help="Enable noise with this seed.")
@click.option("-o", "output", type=click.Path(), default=None, help="CSV output (default stdout).")
@handle_errors
def simulate(model_path, settings_path, input_mode, power, seed, output):
    """Simulate detected powers for one input mode."""
    m = HardwareModel.load(model_path)
    settings = MeshSettings.load(settings_path)
    powers = measure_output(m, settings, input_mode, power, seed)
    lines = ["port,power_w"] + [f"{j},{float(p)!r}" for j, p in enumerate(powers)]
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("-m", "model_path", type=click.Path(exists=True), required=True)
@click.option("-o", "output", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--points", type=int, default=64, show_default=True, help="Sweep points per fit.")
@click.option("--scans-dir", type=click.Path(), default=None, help="Dump fringe scans as CSV here.")
@click.option("--figures", is_flag=True, help="Render insertion-loss figure next to the store.")
@handle_errors
def calibrate(model_path, output, seed, points, scans_dir, figures):
    """Run the full characterization campaign on a simulated device."""
    m = HardwareModel.load(model_path)
    backend = SimulatedBackend(m, seed=seed)
    sink = None
    if scans_dir:
        Path(scans_dir).mkdir(parents=True, exist_ok=True)

        def sink(scan):
            scan.to_csv(Path(scans_dir) / f"actuator_{scan.actuator:03d}.csv")

    store = cal.calibrate_device(backend, m, fit_points=points, scan_sink=sink)
    with open(output, "w") as fh:
        json.dump(store, fh, sort_keys=True, indent=1)
        fh.write("\n")
    loss = store["insertion_loss_db"]
    if figures:
        base = Path(output).with_suffix("")
        write_insertion_loss_csv(loss, f"{base}_loss.csv")
        render_insertion_loss(loss, f"{base}_loss.png")
        click.echo(f"wrote {base}_loss.csv and {base}_loss.png")
    click.echo(
        f"calibrated {len(store['heaters'])}/{2 * len(store['extinction_ratio_db'])} "
        f"actuators; mean insertion loss {np.mean(loss):.2f} dB; "
        f"mean ER {np.mean(store['extinction_ratio_db']):.1f} dB; wrote {output}"
    )


@main.command()
@click.option("-m", "model_path", type=click.Path(exists=True), required=True)
@click.option("-n", "count", type=int, default=100, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("-o", "output", type=click.Path(), required=True)
@click.option("--histogram", "bin_width", type=float, default=None, help="Also write histogram CSV and figure with this bin width.")
@handle_errors
def experiment(model_path, count, seed, output, bin_width):
    """Run the Haar-random fidelity benchmark and write a report."""
    m = HardwareModel.load(model_path)
    report = run_haar_experiment(count, m, seed)
    report.save(output)
    click.echo(
        f"{count} matrices on n={m.n} device: "
        f"F = {report.mean:.4f} ± {report.std:.4f}; wrote {output}"
    )
    if bin_width is not None:
        base = Path(output).with_suffix("")
        write_histogram_csv(report, bin_width, f"{base}_hist.csv")
        render_fidelity_histogram(report, bin_width, f"{base}_hist.png")
        click.echo(f"wrote {base}_hist.csv and {base}_hist.png")


if __name__ == "__main__":
    main()
