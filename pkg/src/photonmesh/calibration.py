"""Characterization procedures run against any device backend: fringe sweeps,
phase-voltage fitting, extinction-ratio extraction, insertion-loss
measurement, and measurement normalization.

The fringe model is I(V) = A + B·cos(φ_offset + ω·V²) with ω = 2π/(R·p_two_pi),
i.e. a single cosine in electrical power. Fitting proceeds by a coarse grid
over ω (with the in-phase/quadrature amplitudes solved linearly per grid
point) followed by local least-squares refinement, which is robust to the
multi-modal cosine landscape.
"""

import csv
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import DataError, FitError, ValidationError
from .hardware import VoltagePlan
from .linalg import normalize_columns

MIN_SCAN_POINTS = 16
ER_CAP_DB = 100.0


@dataclass
class FringeScan:
    """Raw intensities recorded while one actuator is swept in voltage."""

    actuator: int
    voltages: np.ndarray
    intensities: np.ndarray  # shape (points, n_ports)

    def __post_init__(self):
        self.voltages = np.asarray(self.voltages, dtype=np.float64)
        self.intensities = np.asarray(self.intensities, dtype=np.float64)

    def validate(self):
        if self.voltages.ndim != 1 or len(self.voltages) < MIN_SCAN_POINTS:
            raise ValidationError(
                f"fringe scan needs ≥ {MIN_SCAN_POINTS} points, got {len(self.voltages)}"
            )
        if np.any(np.diff(self.voltages) <= 0):
            raise ValidationError("voltage grid must be strictly increasing")
        if self.intensities.shape[0] != len(self.voltages):
            raise ValidationError("one intensity vector is required per grid point")
        return self

    def to_csv(self, path):
        n_ports = self.intensities.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["voltage"] + [f"port_{j}" for j in range(n_ports)])
            for v, row in zip(self.voltages, self.intensities):
                writer.writerow([repr(float(v))] + [repr(float(x)) for x in row])


@dataclass
class HeaterCalibration:
    actuator: int
    phi_offset: float
    p_two_pi: float
    resistance: float
    residual: float  # RMS relative to fringe amplitude
    port: int

    def validate(self):
        if self.p_two_pi <= 0 or self.residual < 0:
            raise ValidationError("calibration must have p_two_pi > 0 and residual ≥ 0")
        return self


@dataclass
class PortEfficiencies:
    input_eff: np.ndarray
    output_eff: np.ndarray

    def __post_init__(self):
        self.input_eff = np.asarray(self.input_eff, dtype=np.float64)
        self.output_eff = np.asarray(self.output_eff, dtype=np.float64)

    def validate(self):
        for eff in (self.input_eff, self.output_eff):
            if np.any(eff <= 0) or np.any(eff > 1):
                raise ValidationError("port efficiencies must lie in (0, 1]")
        return self


def sweep_actuator(backend, actuator, v_min, v_max, points):
    """Record output powers over a voltage grid on one actuator.

    All other actuators are held at their current values; the original plan
    is restored afterwards.
    """
    info = backend.info()
    if not 0 <= int(actuator) < info.actuator_count:
        raise ValidationError(f"actuator {actuator} out of range")
    if not (0 <= v_min < v_max):
        raise ValidationError("need 0 ≤ v_min < v_max")
    if points < MIN_SCAN_POINTS:
        raise ValidationError(f"need at least {MIN_SCAN_POINTS} sweep points")
    base = backend.voltages
    grid = np.linspace(v_min, v_max, int(points))
    rows = []
    try:
        for v in grid:
            plan = base.copy()
            plan[int(actuator)] = v
            backend.set_voltages(VoltagePlan(plan))
            rows.append(backend.read_outputs())
    finally:
        backend.set_voltages(VoltagePlan(base))
    return FringeScan(int(actuator), grid, np.array(rows)).validate()


def _fit_port(u, y):
    """Grid-then-refine cosine fit in u = V²; returns (A, B, omega, phi0, rms)."""
    span = u[-1] - u[0]
    if span <= 0:
        raise FitError("degenerate voltage span")
    # at most ~one fringe per 2 grid points is resolvable
    omega_max = math.pi * len(u) / span
    # grid fine enough that the true omega's basin is never skipped
    omegas = np.linspace(0.25 * 2.0 * math.pi / span, omega_max, max(400, 4 * len(u)))
    best = None
    ones = np.ones_like(u)
    for omega in omegas:
        basis = np.column_stack([ones, np.cos(omega * u), np.sin(omega * u)])
        coef, res, _, _ = np.linalg.lstsq(basis, y, rcond=None)
        sse = float(res[0]) if res.size else float(np.sum((basis @ coef - y) ** 2))
        if best is None or sse < best[0]:
            best = (sse, omega, coef)
    _, omega0, coef0 = best

    def residuals(p):
        a, c, s, omega = p
        return a + c * np.cos(omega * u) + s * np.sin(omega * u) - y

    sol = least_squares(residuals, x0=[coef0[0], coef0[1], coef0[2], omega0])
    a, c, s, omega = sol.x
    b = math.hypot(c, s)
    phi0 = math.atan2(-s, c) % (2.0 * math.pi)
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    return a, b, omega, phi0, rms


def fit_fringe(scan, port=None, resistance=100.0):
    """Fit the cosine fringe of one scan and convert to heater parameters.

    When port is None the output port with the largest intensity swing is
    used. The fitted phi_offset is the cosine phase at V = 0 as seen on that
    port; on a bar-type port it differs from the heater's own offset by π.
    """
    scan.validate()
    if port is None:
        port = int(np.argmax(np.ptp(scan.intensities, axis=0)))
    y = scan.intensities[:, int(port)]
    u = scan.voltages**2
    scale = float(np.max(np.abs(y)))
    if scale <= 0 or np.ptp(y) < 1e-9 * max(scale, 1e-30):
        raise FitError(f"actuator {scan.actuator}: no fringe visible on port {port}")
    a, b, omega, phi0, rms = _fit_port(u, y / scale)
    if b < 1e-6:
        raise FitError(f"actuator {scan.actuator}: fitted fringe amplitude is zero")
    if omega * (u[-1] - u[0]) < 2.0 * math.pi * 0.99:
        raise FitError(
            f"actuator {scan.actuator}: scan spans less than one fringe "
            "(under-constrained)"
        )
    p_two_pi = 2.0 * math.pi / (omega * resistance)
    return HeaterCalibration(
        actuator=scan.actuator,
        phi_offset=phi0,
        p_two_pi=p_two_pi,
        resistance=resistance,
        residual=rms / b,
        port=int(port),
    ).validate()


def extinction_ratio(scan, port, dark_offset=0.0):
    """10·log₁₀(I_max/I_min) on one port, capped at 100 dB.

    The scan must cover at least one full fringe for the extrema to be
    meaningful; dark_offset is subtracted before taking the ratio.
    """
    scan.validate()
    y = scan.intensities[:, int(port)] - dark_offset
    if np.any(y < -1e-12 * max(float(np.max(np.abs(y))), 1e-300)):
        raise DataError("negative intensities after dark subtraction")
    i_max = float(np.max(y))
    i_min = float(np.min(y))
    if i_max <= 0:
        raise DataError("no light detected on the requested port")
    if i_min <= i_max * 10.0 ** (-ER_CAP_DB / 10.0):
        return ER_CAP_DB
    return 10.0 * math.log10(i_max / i_min)


def measure_insertion_loss(backend, mode):
    """dB loss of the mode→mode path; the mesh must already route identity."""
    info = backend.info()
    if not 0 <= int(mode) < info.n:
        raise ValidationError(f"mode {mode} out of range for n={info.n}")
    backend.select_input(int(mode))
    powers = backend.read_outputs()
    p_out = float(powers[int(mode)])
    if p_out <= 0:
        raise DataError(f"no power detected on through port {mode}")
    return 10.0 * math.log10(backend.input_power / p_out)


def normalize_measurements(raw, dark, eff, noise_floor=None):
    """Turn a raw intensity matrix into a column-normalized |U_exp|.

    Steps: subtract per-port dark offsets, divide by input×output port
    efficiencies, clamp small negatives to zero, take the square root, and
    L2-normalize each column. Negatives larger than 3× the noise floor are
    data errors rather than silently clamped.
    """
    intensities = np.asarray(raw.intensities, dtype=np.float64)
    n = intensities.shape[0]
    if intensities.shape != (n, n):
        raise ValidationError(f"expected a square intensity matrix, got {intensities.shape}")
    if np.any(intensities < 0):
        raise ValidationError("raw intensities must be non-negative")
    eff.validate()
    dark_col = np.broadcast_to(np.atleast_1d(dark.dark_offset), (n,)) if np.ndim(
        dark.dark_offset
    ) == 0 else dark.dark_offset
    corrected = intensities - np.asarray(dark_col, dtype=np.float64)[:, None]
    if noise_floor is None:
        noise_floor = dark.noise_sigma * intensities + 1e-18
    tolerated = 3.0 * np.asarray(noise_floor)
    too_negative = corrected < -tolerated
    if np.any(too_negative):
        j, i = np.argwhere(too_negative)[0]
        raise DataError(
            f"intensity at output {j}, input {i} is below dark level by more "
            "than 3× the noise floor"
        )
    corrected = np.clip(corrected, 0.0, None)
    corrected = corrected / (eff.output_eff[:, None] * eff.input_eff[None, :])
    if np.any(np.all(corrected == 0.0, axis=0)):
        raise DataError("a column is identically zero after correction")
    return normalize_columns(np.sqrt(corrected))


def estimate_port_efficiencies(backend):
    """Port efficiencies from identity-routing losses, split equally between
    input and output facets (the published correction procedure is not
    described; this is the declared stand-in)."""
    info = backend.info()
    loss_db = np.array([measure_insertion_loss(backend, m) for m in range(info.n)])
    # float rounding can report a few 1e-16 dB of gain on a lossless path
    half = np.minimum(10.0 ** (-(loss_db / 2.0) / 10.0), 1.0)
    return PortEfficiencies(half, half).validate()


def calibrate_device(
    backend, routing_model, fit_points=64, er_points=768, v_max=7.0, scan_sink=None
):
    """Full characterization campaign against one device backend.

    Passes: (1) fringe sweeps of every internal (θ) heater with the mesh at
    rest; (2) fringe sweeps of every external (φ) heater with all MZIs set to
    their 50:50 point via the fresh θ calibrations, so the external phases
    actually interfere; (3) identity routing for per-mode insertion loss and
    port efficiencies; (4) per-cell extinction ratios, sweeping each θ heater
    while every other cell is transparent. Routing steps compile settings
    through routing_model's heater parameters. Actuators with no visible
    fringe (e.g. first-column external phases, which single-input intensity
    measurements cannot see) are reported as uncalibrated instead of failing
    the campaign.
    """
    from .hardware import phases_to_voltages
    from .mesh import identity_settings

    info = backend.info()
    n_cells = info.actuator_count // 2
    calibrations = {}
    failures = []

    def _sweep_and_fit(actuator, input_mode):
        backend.select_input(input_mode)
        scan = sweep_actuator(backend, actuator, 0.0, v_max, fit_points)
        if scan_sink is not None:
            scan_sink(scan)
        return fit_fringe(scan)

    # pass 1: internal heaters
    backend.set_voltages(VoltagePlan(np.zeros(info.actuator_count)))
    for k in range(n_cells):
        actuator = 2 * k
        top_mode = info.topology[k].top_mode
        try:
            calibrations[actuator] = _sweep_and_fit(actuator, top_mode)
        except FitError as exc:
            failures.append({"actuator": actuator, "reason": str(exc)})

    # pass 2: external heaters, with all MZIs at their 50:50 point
    quadrature = np.zeros(info.actuator_count)
    for k in range(n_cells):
        cal = calibrations.get(2 * k)
        if cal is None:
            continue
        delta = (math.pi / 2.0 - cal.phi_offset) % (2.0 * math.pi)
        quadrature[2 * k] = math.sqrt(
            delta / (2.0 * math.pi) * cal.p_two_pi * cal.resistance
        )
    backend.set_voltages(VoltagePlan(quadrature))
    for k in range(n_cells):
        actuator = 2 * k + 1
        top_mode = info.topology[k].top_mode
        try:
            calibrations[actuator] = _sweep_and_fit(actuator, top_mode)
        except FitError as exc:
            failures.append({"actuator": actuator, "reason": str(exc)})

    # pass 3: identity routing
    identity_plan = phases_to_voltages(identity_settings(info.n), routing_model)
    backend.set_voltages(identity_plan)
    insertion_loss = [measure_insertion_loss(backend, m) for m in range(info.n)]
    efficiencies = estimate_port_efficiencies(backend)

    # pass 4: per-cell extinction ratios through the transparent mesh
    ratios = []
    for k in range(n_cells):
        top_mode = info.topology[k].top_mode
        backend.select_input(top_mode)
        scan = sweep_actuator(backend, 2 * k, 0.0, v_max, er_points)
        ratios.append(extinction_ratio(scan, top_mode))

    ordered = [calibrations[a] for a in sorted(calibrations)]
    return calibration_store(
        info, ordered, efficiencies, insertion_loss, ratios, failures
    )


def calibration_store(
    backend_info,
    heater_calibrations,
    port_efficiencies,
    insertion_loss_db,
    extinction_ratios_db,
    failures=None,
):
    """Assemble the per-device calibration JSON document."""
    return {
        "schema_version": 1,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "device": {
            "n": backend_info.n,
            "actuator_count": backend_info.actuator_count,
        },
        "heaters": [
            {
                "actuator": c.actuator,
                "phi_offset": c.phi_offset,
                "p_two_pi": c.p_two_pi,
                "resistance": c.resistance,
                "residual": c.residual,
                "port": c.port,
            }
            for c in heater_calibrations
        ],
        "port_efficiencies": {
            "input": port_efficiencies.input_eff.tolist(),
            "output": port_efficiencies.output_eff.tolist(),
        },
        "insertion_loss_db": list(insertion_loss_db),
        "extinction_ratio_db": list(extinction_ratios_db),
        "uncalibrated": failures or [],
    }
