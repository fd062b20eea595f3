"""End-to-end benchmark: sample Haar unitaries, compile them onto the
(simulated) device, normalize the detected intensities, and score amplitude
fidelities.

Per-matrix seeds are split from the master seed with numpy's SeedSequence
(entropy=master, spawn_key=(index, stream)), so matrices are independent and
the experiment parallelizes without changing results.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .calibration import PortEfficiencies, normalize_measurements
from .errors import ValidationError
from .hardware import measure_all
from .linalg import amplitude_fidelity, haar_random_unitary
from .mesh import decompose

DEFAULT_INPUT_POWER_W = 1e-3

_HAAR_STREAM = 0
_NOISE_STREAM = 1


def _split_seed(master_seed, index, stream):
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index, stream))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class MeasurementRecord:
    """Raw detected powers: entry (j, i) is output port j for input mode i."""

    n: int
    intensities: np.ndarray
    input_power: float
    seed: int

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=np.float64)

    def validate(self):
        if self.intensities.shape != (self.n, self.n):
            raise ValidationError(
                f"intensity matrix must be {self.n}×{self.n}, got {self.intensities.shape}"
            )
        if np.any(self.intensities < 0):
            raise ValidationError("intensities must be non-negative")
        return self


@dataclass
class FidelityReport:
    fidelities: list
    mean: float
    std: float
    count: int
    master_seed: int
    model_fingerprint: str
    phase_noise_sigma: float = 0.0
    n: int = 12
    schema_version: int = 1
    seeds: list = field(default_factory=list)

    def validate(self):
        if self.count != len(self.fidelities):
            raise ValidationError("report count does not match the fidelity list")
        mean = float(np.mean(self.fidelities))
        std = float(np.std(self.fidelities, ddof=1)) if self.count > 1 else 0.0
        if abs(mean - self.mean) > 1e-12 or abs(std - self.std) > 1e-12:
            raise ValidationError("report statistics are inconsistent with the list")
        return self

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "n": self.n,
            "count": self.count,
            "master_seed": self.master_seed,
            "model_fingerprint": self.model_fingerprint,
            "phase_noise_sigma": self.phase_noise_sigma,
            "fidelities": list(self.fidelities),
            "per_matrix_seeds": list(self.seeds),
            "mean": self.mean,
            "std": self.std,
        }

    def save(self, path):
        # sorted keys + repr floats keep identical runs byte-identical
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")


def model_port_efficiencies(model):
    """Exact per-port efficiencies implied by the model's loss budget."""
    return PortEfficiencies(
        model.input_efficiencies(), model.output_efficiencies()
    ).validate()


def run_single(u, model, seed, input_power=DEFAULT_INPUT_POWER_W):
    """Compile u, measure every input mode, normalize, and score fidelity."""
    model.validate()
    if u.shape != (model.n, model.n):
        raise ValidationError(
            f"unitary shape {u.shape} does not match model n={model.n}"
        )
    settings = decompose(u)
    intensities = measure_all(model, settings, input_power, seed)
    record = MeasurementRecord(model.n, intensities, input_power, seed).validate()
    amp = normalize_measurements(record, model.detector, model_port_efficiencies(model))
    return record, amplitude_fidelity(u, amp)


def run_haar_experiment(count, model, seed, input_power=DEFAULT_INPUT_POWER_W):
    """Fidelity statistics over `count` independent Haar-random matrices."""
    if count < 1:
        raise ValidationError(f"matrix count must be ≥ 1, got {count}")
    model.validate()
    fidelities = []
    noise_seeds = []
    for i in range(count):
        u = haar_random_unitary(model.n, _split_seed(seed, i, _HAAR_STREAM))
        noise_seed = _split_seed(seed, i, _NOISE_STREAM)
        _, f = run_single(u, model, noise_seed, input_power=input_power)
        fidelities.append(f)
        noise_seeds.append(noise_seed)
    mean = float(np.mean(fidelities))
    std = float(np.std(fidelities, ddof=1)) if count > 1 else 0.0
    return FidelityReport(
        fidelities=fidelities,
        mean=mean,
        std=std,
        count=count,
        master_seed=seed,
        model_fingerprint=model.fingerprint(),
        phase_noise_sigma=model.phase_set_noise_sigma,
        n=model.n,
        seeds=noise_seeds,
    ).validate()


def histogram(report, bin_width):
    """Counts over contiguous bins whose edges are multiples of bin_width.

    Bins inside the occupied range are emitted even when empty; counts sum to
    the matrix count.
    """
    if bin_width <= 0:
        raise ValidationError(f"bin width must be positive, got {bin_width}")
    values = np.asarray(report.fidelities, dtype=np.float64)
    lo = int(np.floor(values.min() / bin_width))
    hi = int(np.floor(values.max() / bin_width))
    bins = []
    for k in range(lo, hi + 1):
        left = k * bin_width
        right = (k + 1) * bin_width
        count = int(np.sum((values >= left) & (values < right)))
        bins.append((left, count))
    # values exactly on the top edge belong to the last bin
    missing = len(values) - sum(c for _, c in bins)
    if missing:
        bins[-1] = (bins[-1][0], bins[-1][1] + missing)
    return bins
