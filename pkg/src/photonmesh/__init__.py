"""photonmesh: compiler and physics simulator for universal MZI-mesh
photonic processors."""

from .backend import BackendInfo, DeviceBackend, SimulatedBackend
from .calibration import (
    FringeScan,
    HeaterCalibration,
    PortEfficiencies,
    calibrate_device,
    extinction_ratio,
    fit_fringe,
    measure_insertion_loss,
    normalize_measurements,
    sweep_actuator,
)
from .errors import ComplianceError, DataError, FitError, ValidationError
from .experiment import (
    FidelityReport,
    MeasurementRecord,
    histogram,
    run_haar_experiment,
    run_single,
)
from .hardware import (
    DetectorParams,
    HardwareModel,
    HeaterParams,
    LossBudget,
    UnitCellHardware,
    VoltagePlan,
    ideal_model,
    kappa_for_extinction_db,
    measure_all,
    measure_output,
    paper_model,
    phases_to_voltages,
    simulate_transfer,
    voltages_to_settings,
)
from .linalg import (
    amplitude_fidelity,
    haar_random_unitary,
    is_unitary,
    load_unitary,
    save_unitary,
    unitarity_deviation,
)
from .mesh import (
    MeshSettings,
    UnitCellAddress,
    UnitCellSettings,
    decompose,
    identity_settings,
    mesh_topology,
    reconstruct,
    unit_cell_matrix,
    wrap_phase,
)

__version__ = "0.1.0"
