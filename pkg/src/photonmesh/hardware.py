"""Physics model of the imperfect processor: non-ideal directional couplers,
facet and propagation losses, thermo-optic heater electrics, detector dark
offsets, and phase-setting noise.

Heater law: φ = φ_offset + 2π · (V²/R) / p_two_pi, i.e. phase is linear in
dissipated electrical power. Losses are applied as amplitude factors:
per-port facet factors 10^(−dB/20) at input and output, plus one
mode-independent propagation factor from dB/cm × path length.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import apply_cells
from .errors import ComplianceError, ValidationError
from .mesh import MeshSettings, UnitCellSettings, _cell_arrays, mesh_topology, wrap_phase

DEFAULT_RESISTANCE_OHM = 100.0
DEFAULT_P_TWO_PI_W = 0.310
DEFAULT_COMPLIANCE_V = 10.0

# Equal-coupler deviation |κ − 0.5| reproducing a given MZI extinction ratio:
# bar-port power spans [(1−2κ)², 1], so ER_dB = −20·log10|1−2κ|.
def kappa_for_extinction_db(er_db):
    return 0.5 * (1.0 - 10.0 ** (-er_db / 20.0))


@dataclass(frozen=True)
class HeaterParams:
    resistance: float = DEFAULT_RESISTANCE_OHM
    p_two_pi: float = DEFAULT_P_TWO_PI_W
    phi_offset: float = 0.0

    def validate(self):
        if not (self.resistance > 0 and self.p_two_pi > 0):
            raise ValidationError("heater resistance and p_two_pi must be positive")
        return self

    def phase(self, volts):
        """Realized phase at a given drive voltage."""
        power = volts * volts / self.resistance
        return self.phi_offset + 2.0 * math.pi * power / self.p_two_pi

    def voltage(self, phase):
        """Smallest non-negative voltage realizing the phase mod 2π."""
        delta = (phase - self.phi_offset) % (2.0 * math.pi)
        power = delta / (2.0 * math.pi) * self.p_two_pi
        return math.sqrt(power * self.resistance)


@dataclass(frozen=True)
class UnitCellHardware:
    """Imperfection parameters of one cell: two couplers, two heaters."""

    kappa1: float = 0.5
    kappa2: float = 0.5
    heater_theta: HeaterParams = field(default_factory=HeaterParams)
    heater_phi: HeaterParams = field(default_factory=HeaterParams)

    def validate(self):
        for k in (self.kappa1, self.kappa2):
            if not 0.0 < k < 1.0:
                raise ValidationError(f"coupler ratio must be in (0, 1), got {k}")
        self.heater_theta.validate()
        self.heater_phi.validate()
        return self


@dataclass
class LossBudget:
    input_coupling_db: np.ndarray
    output_coupling_db: np.ndarray
    propagation_db_per_cm: float = 0.0
    path_length_cm: float = 0.0

    def __post_init__(self):
        self.input_coupling_db = np.asarray(self.input_coupling_db, dtype=np.float64)
        self.output_coupling_db = np.asarray(self.output_coupling_db, dtype=np.float64)

    @classmethod
    def lossless(cls, n):
        return cls(np.zeros(n), np.zeros(n))

    def validate(self, n):
        if self.input_coupling_db.shape != (n,) or self.output_coupling_db.shape != (n,):
            raise ValidationError("coupling-loss arrays must have one entry per port")
        if (
            np.any(self.input_coupling_db < 0)
            or np.any(self.output_coupling_db < 0)
            or self.propagation_db_per_cm < 0
            or self.path_length_cm < 0
        ):
            raise ValidationError("loss budget values must be non-negative")
        return self

    @property
    def propagation_db(self):
        return self.propagation_db_per_cm * self.path_length_cm


@dataclass
class DetectorParams:
    dark_offset: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self):
        self.dark_offset = np.atleast_1d(np.asarray(self.dark_offset, dtype=np.float64))

    @classmethod
    def quiet(cls, n):
        return cls(np.zeros(n))

    def validate(self, n):
        if self.dark_offset.shape == (1,):
            self.dark_offset = np.full(n, self.dark_offset[0])
        if self.dark_offset.shape != (n,):
            raise ValidationError("dark_offset must be scalar or one entry per port")
        if np.any(self.dark_offset < 0) or self.noise_sigma < 0:
            raise ValidationError("detector parameters must be non-negative")
        return self


@dataclass
class HardwareModel:
    """Complete imperfection ledger for an n-mode processor.

    cells are aligned with mesh_topology(n) in column-major order. Immutable
    by convention after validation; all simulation entry points are pure.
    """

    n: int
    cells: list
    loss: LossBudget
    detector: DetectorParams
    phase_set_noise_sigma: float = 0.0
    compliance_volts: float = DEFAULT_COMPLIANCE_V

    def validate(self):
        topo = mesh_topology(self.n)
        if len(self.cells) != len(topo):
            raise ValidationError(
                f"expected {len(topo)} hardware cells for n={self.n}, got {len(self.cells)}"
            )
        for cell in self.cells:
            cell.validate()
        self.loss.validate(self.n)
        self.detector.validate(self.n)
        if self.phase_set_noise_sigma < 0 or self.compliance_volts <= 0:
            raise ValidationError("noise sigma must be ≥ 0 and compliance > 0")
        return self

    @property
    def topology(self):
        return mesh_topology(self.n)

    @property
    def actuator_count(self):
        return 2 * len(self.cells)

    def input_efficiencies(self):
        """Linear power efficiency per input port (facet only)."""
        return 10.0 ** (-self.loss.input_coupling_db / 10.0)

    def output_efficiencies(self):
        """Linear power efficiency per output port (facet + propagation)."""
        return 10.0 ** (-(self.loss.output_coupling_db + self.loss.propagation_db) / 10.0)

    def to_dict(self):
        return {
            "n": self.n,
            "cells": [
                {
                    "kappa1": c.kappa1,
                    "kappa2": c.kappa2,
                    "heater_theta": {
                        "resistance": c.heater_theta.resistance,
                        "p_two_pi": c.heater_theta.p_two_pi,
                        "phi_offset": c.heater_theta.phi_offset,
                    },
                    "heater_phi": {
                        "resistance": c.heater_phi.resistance,
                        "p_two_pi": c.heater_phi.p_two_pi,
                        "phi_offset": c.heater_phi.phi_offset,
                    },
                }
                for c in self.cells
            ],
            "loss": {
                "input_coupling_db": self.loss.input_coupling_db.tolist(),
                "output_coupling_db": self.loss.output_coupling_db.tolist(),
                "propagation_db_per_cm": self.loss.propagation_db_per_cm,
                "path_length_cm": self.loss.path_length_cm,
            },
            "detector": {
                "dark_offset": self.detector.dark_offset.tolist(),
                "noise_sigma": self.detector.noise_sigma,
            },
            "phase_set_noise_sigma": self.phase_set_noise_sigma,
            "compliance_volts": self.compliance_volts,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            cells = [
                UnitCellHardware(
                    kappa1=float(c.get("kappa1", 0.5)),
                    kappa2=float(c.get("kappa2", 0.5)),
                    heater_theta=HeaterParams(**c.get("heater_theta", {})),
                    heater_phi=HeaterParams(**c.get("heater_phi", {})),
                )
                for c in d["cells"]
            ]
            loss = LossBudget(
                d["loss"]["input_coupling_db"],
                d["loss"]["output_coupling_db"],
                float(d["loss"].get("propagation_db_per_cm", 0.0)),
                float(d["loss"].get("path_length_cm", 0.0)),
            )
            detector = DetectorParams(
                d["detector"]["dark_offset"],
                float(d["detector"].get("noise_sigma", 0.0)),
            )
            model = cls(
                n=int(d["n"]),
                cells=cells,
                loss=loss,
                detector=detector,
                phase_set_noise_sigma=float(d.get("phase_set_noise_sigma", 0.0)),
                compliance_volts=float(d.get("compliance_volts", DEFAULT_COMPLIANCE_V)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed hardware model document: {exc}") from exc
        return model.validate()

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(d)

    def fingerprint(self):
        """Short stable hash of the full configuration, for reports."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def ideal_model(n):
    """Reference device: 50:50 couplers, no loss, no dark, no noise."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValidationError(f"mode count must be an integer ≥ 2, got {n!r}")
    cells = [UnitCellHardware() for _ in mesh_topology(n)]
    return HardwareModel(
        n=n,
        cells=cells,
        loss=LossBudget.lossless(n),
        detector=DetectorParams.quiet(n),
    ).validate()


PAPER_N = 12
PAPER_EXTINCTION_DB = 22.4
PAPER_P_TWO_PI_W = 0.310
PAPER_FACET_DB = 0.4
PAPER_INSERTION_DB = 3.4
PAPER_PATH_CM = 10.7
# Error knob reproducing the measured fidelity shortfall; the published
# characterization does not apportion its error budget, so this setting is a
# declared choice, recorded in every report.
PAPER_PHASE_NOISE_RAD = 0.05


def paper_model(seed):
    """12-mode model matching the published device averages.

    Both couplers of a cell share one κ drawn at 0.5 ± δ with random sign,
    δ chosen so every MZI has a 22.4 dB extinction ratio; propagation loss is
    the arithmetic remainder of the 3.4 dB insertion loss after two 0.4 dB
    facets over 10.7 cm; heater powers average 310 mW per 2π.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    topo = mesh_topology(PAPER_N)
    delta = 0.5 - kappa_for_extinction_db(PAPER_EXTINCTION_DB)
    cells = []
    for _ in topo:
        kappa = 0.5 + delta * rng.choice([-1.0, 1.0])
        heaters = []
        for _ in range(2):
            p2pi = PAPER_P_TWO_PI_W * float(np.clip(1.0 + 0.05 * rng.standard_normal(), 0.7, 1.3))
            heaters.append(
                HeaterParams(
                    resistance=DEFAULT_RESISTANCE_OHM,
                    p_two_pi=p2pi,
                    phi_offset=float(rng.uniform(0.0, 2.0 * math.pi)),
                )
            )
        cells.append(UnitCellHardware(kappa, kappa, heaters[0], heaters[1]))

    # Zero-mean port jitter keeps the across-mode average at exactly 3.4 dB.
    jitter_in = rng.normal(0.0, 0.05, PAPER_N)
    jitter_out = rng.normal(0.0, 0.05, PAPER_N)
    jitter_in -= jitter_in.mean()
    jitter_out -= jitter_out.mean()
    propagation = (PAPER_INSERTION_DB - 2.0 * PAPER_FACET_DB) / PAPER_PATH_CM
    loss = LossBudget(
        np.clip(PAPER_FACET_DB + jitter_in, 0.0, None),
        np.clip(PAPER_FACET_DB + jitter_out, 0.0, None),
        propagation,
        PAPER_PATH_CM,
    )
    detector = DetectorParams(np.full(PAPER_N, 1e-9))
    return HardwareModel(
        n=PAPER_N,
        cells=cells,
        loss=loss,
        detector=detector,
        phase_set_noise_sigma=PAPER_PHASE_NOISE_RAD,
    ).validate()


def _noise_rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _realized_phases(model, settings, seed):
    """Per-cell (theta, phi) actually set, with optional Gaussian set-noise."""
    order, modes, thetas, phis = _cell_arrays(settings)
    if seed is not None and model.phase_set_noise_sigma > 0:
        rng = _noise_rng(seed, 0)
        thetas = thetas + rng.normal(0.0, model.phase_set_noise_sigma, thetas.shape)
        phis = phis + rng.normal(0.0, model.phase_set_noise_sigma, phis.shape)
    kappa1 = np.empty(len(order))
    kappa2 = np.empty(len(order))
    # model.cells are already column-major, matching the sorted evaluation order
    for pos in range(len(order)):
        kappa1[pos] = model.cells[pos].kappa1
        kappa2[pos] = model.cells[pos].kappa2
    return modes, thetas, phis, kappa1, kappa2


def simulate_transfer(model, settings, seed=None):
    """N×N complex transfer matrix of the configured imperfect device.

    Includes coupler imbalance, facet and propagation losses, and (when a
    seed is given) phase-setting noise. Detector effects are not part of the
    transfer matrix; see measure_output.
    """
    model.validate()
    settings.validate()
    if settings.n != model.n:
        raise ValidationError(
            f"settings are for n={settings.n} but model has n={model.n}"
        )
    modes, thetas, phis, kappa1, kappa2 = _realized_phases(model, settings, seed)
    m = np.eye(model.n, dtype=np.complex128)
    apply_cells(m, modes, thetas, phis, kappa1, kappa2)
    m = np.exp(1j * settings.output_phases)[:, None] * m
    amp_in = np.sqrt(model.input_efficiencies())
    amp_out = np.sqrt(model.output_efficiencies())
    return amp_out[:, None] * m * amp_in[None, :]


@dataclass
class VoltagePlan:
    """Drive voltages, indexed like MeshSettings phases: actuator 2k is the
    internal (θ) heater of cell k in column-major order, 2k+1 the external
    (φ) heater."""

    voltages: np.ndarray

    def __post_init__(self):
        self.voltages = np.asarray(self.voltages, dtype=np.float64)

    def validate(self, compliance_volts):
        if np.any(self.voltages < 0) or np.any(self.voltages > compliance_volts):
            raise ComplianceError("voltage plan violates the compliance limit")
        return self


def phases_to_voltages(settings, model):
    """Invert the heater law per actuator, smallest non-negative voltage."""
    settings.validate()
    model.validate()
    if settings.n != model.n:
        raise ValidationError("settings/model mode-count mismatch")
    order, _, thetas, phis = _cell_arrays(settings)
    volts = np.empty(2 * len(order))
    for k in range(len(order)):
        hw = model.cells[k]
        for a, (heater, phase) in enumerate(
            [(hw.heater_theta, thetas[k]), (hw.heater_phi, phis[k])]
        ):
            v = heater.voltage(phase)
            if v > model.compliance_volts:
                raise ComplianceError(
                    f"actuator {2 * k + a}: required {v:.2f} V exceeds "
                    f"compliance {model.compliance_volts:.2f} V"
                )
            volts[2 * k + a] = v
    return VoltagePlan(volts)


def voltages_to_settings(plan, model):
    """Forward heater law: realized MeshSettings for a voltage plan."""
    model.validate()
    if plan.voltages.shape != (model.actuator_count,):
        raise ValidationError(
            f"voltage plan has {plan.voltages.shape[0]} entries, "
            f"expected {model.actuator_count}"
        )
    cells = []
    for k, addr in enumerate(model.topology):
        hw = model.cells[k]
        theta = wrap_phase(hw.heater_theta.phase(plan.voltages[2 * k]))
        phi = wrap_phase(hw.heater_phi.phase(plan.voltages[2 * k + 1]))
        cells.append(UnitCellSettings(addr, theta, phi))
    return MeshSettings(model.n, cells).validate()


def measure_all(model, settings, input_power, seed):
    """Detected power matrix: entry (j, i) is output port j for input i.

    One phase-noise draw covers the whole matrix (the mesh is set once and
    all inputs are scanned), so columns agree with measure_output at the
    same seed.
    """
    if input_power <= 0:
        raise ValidationError(f"input power must be positive, got {input_power}")
    t = simulate_transfer(model, settings, seed=seed)
    powers = np.abs(t) ** 2 * input_power
    out = powers + model.detector.dark_offset[:, None]
    if model.detector.noise_sigma > 0 and seed is not None:
        for i in range(model.n):
            rng = _noise_rng(seed, 1, i)
            out[:, i] = out[:, i] * (
                1.0 + model.detector.noise_sigma * rng.standard_normal(model.n)
            )
    return np.clip(out, 0.0, None)


def measure_output(model, settings, input_mode, input_power, seed):
    """Detected power at every output port for light on one input mode."""
    if not 0 <= int(input_mode) < model.n:
        raise ValidationError(f"input mode {input_mode} out of range for n={model.n}")
    return measure_all(model, settings, input_power, seed)[:, int(input_mode)]
