"""Device-backend abstraction.

The device proper exposes exactly three verbs — set_voltages, read_outputs,
info — so a real-instrument driver can replace the simulator without touching
calibration or experiment code. Light-source control (which input fiber is
lit and at what power) belongs to the test station, not the device; the
simulated backend provides it via select_input.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .hardware import VoltagePlan, measure_all, voltages_to_settings


@dataclass(frozen=True)
class BackendInfo:
    n: int
    topology: tuple
    actuator_count: int


class DeviceBackend(ABC):
    """Stateful device session; strictly single-threaded per instance.

    The base class remembers the last voltage plan that was applied so that
    sweep procedures can hold all other actuators at their current values.
    """

    def __init__(self):
        self._voltages = None

    @abstractmethod
    def set_voltages(self, plan: VoltagePlan):
        ...

    @abstractmethod
    def read_outputs(self) -> np.ndarray:
        ...

    @abstractmethod
    def info(self) -> BackendInfo:
        ...

    @property
    def voltages(self):
        """Last applied plan (all zero before the first set_voltages)."""
        if self._voltages is None:
            return np.zeros(self.info().actuator_count)
        return self._voltages.copy()


class SimulatedBackend(DeviceBackend):
    """Drives the physics model through the three-verb device interface."""

    def __init__(self, model, seed=0, input_mode=0, input_power=1e-3):
        super().__init__()
        model.validate()
        self.model = model
        self._seed = seed
        self._reads = 0
        self.select_input(input_mode, input_power)

    def select_input(self, mode, power=None):
        """Test-station verb: route the source to one input fiber."""
        if not 0 <= int(mode) < self.model.n:
            raise ValidationError(f"input mode {mode} out of range for n={self.model.n}")
        if power is not None:
            if power <= 0:
                raise ValidationError(f"input power must be positive, got {power}")
            self._input_power = float(power)
        self._input_mode = int(mode)

    @property
    def input_mode(self):
        return self._input_mode

    @property
    def input_power(self):
        return self._input_power

    def set_voltages(self, plan):
        plan.validate(self.model.compliance_volts)
        if plan.voltages.shape != (self.model.actuator_count,):
            raise ValidationError(
                f"plan has {plan.voltages.shape[0]} voltages, "
                f"expected {self.model.actuator_count}"
            )
        self._voltages = plan.voltages.copy()

    def read_outputs(self):
        settings = voltages_to_settings(VoltagePlan(self.voltages), self.model)
        # every read gets a fresh noise draw but stays reproducible per session
        self._reads += 1
        seed = None
        if self.model.phase_set_noise_sigma > 0 or self.model.detector.noise_sigma > 0:
            seed = (self._seed, self._reads)
        return measure_all(self.model, settings, self._input_power, seed)[
            :, self._input_mode
        ]

    def info(self):
        return BackendInfo(
            n=self.model.n,
            topology=tuple(self.model.topology),
            actuator_count=self.model.actuator_count,
        )
