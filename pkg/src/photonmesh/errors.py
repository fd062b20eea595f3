"""Exception hierarchy shared by all photonmesh modules.

ValidationError covers malformed arguments and inputs (CLI exit code 2);
FitError and DataError cover failures of numerical procedures on otherwise
well-formed data (CLI exit code 3).
"""


class ValidationError(ValueError):
    """Invalid argument, malformed file, or broken invariant."""


class ComplianceError(ValidationError):
    """A requested actuator setting exceeds the voltage compliance limit."""


class FitError(RuntimeError):
    """A calibration fit is under-constrained or did not converge."""


class DataError(RuntimeError):
    """Measured data violates the assumptions of a processing step."""
