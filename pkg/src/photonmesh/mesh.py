"""Bidirectional compiler between N×N unitaries and the rectangular mesh of
tunable MZI + external-phase unit cells.

Frozen 2×2 convention for a unit cell acting on adjacent modes (m, m+1):

    cell(θ, φ) = DC(½) · diag(e^{iθ}, 1) · DC(½) · diag(e^{iφ}, 1)
    DC(κ)      = [[√(1−κ), i√κ], [i√κ, √(1−κ)]]

so the external phase φ sits on the top input before the MZI. Under this
convention the cell is fully transmissive ("bar", identity moduli) at θ = π
and fully crossing at θ = 0; (θ, φ) = (π, π) is exactly the identity matrix.

A compiled mesh is the diagonal output-phase layer times the product of
embedded cells, last column leftmost:

    U = diag(e^{i·output_phases}) · Π_{columns, last→first} Π_{cells in col} cell
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import apply_cells, nulling_sweep
from .errors import ValidationError
from .linalg import assert_unitary

TWO_PI = 2.0 * math.pi

# Identity cell under the frozen convention.
BAR_STATE = (math.pi, math.pi)
CROSS_STATE = (0.0, 0.0)


def wrap_phase(x):
    """Reduce a phase to [0, 2π); negative remainders are shifted up."""
    if not math.isfinite(x):
        raise ValidationError(f"phase is not finite: {x!r}")
    r = math.fmod(x, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    # adding 2π to a tiny negative remainder can round to exactly 2π
    if r >= TWO_PI:
        r = 0.0
    return r


@dataclass(frozen=True, order=True)
class UnitCellAddress:
    """Position of a unit cell: mesh column and the upper coupled mode."""

    column: int
    top_mode: int

    def validate(self, n):
        if not 0 <= self.column < n:
            raise ValidationError(f"column {self.column} out of range for n={n}")
        if not 0 <= self.top_mode <= n - 2:
            raise ValidationError(f"top_mode {self.top_mode} out of range for n={n}")
        if self.column % 2 != self.top_mode % 2:
            raise ValidationError(
                f"parity violation at (column={self.column}, top_mode={self.top_mode})"
            )


@dataclass(frozen=True)
class UnitCellSettings:
    address: UnitCellAddress
    theta: float
    phi: float


@dataclass
class MeshSettings:
    """Compiled program for one unitary: per-cell phases plus output phases.

    Cells are kept in column-major evaluation order (column 0 is the input
    side; within a column, increasing top_mode).
    """

    n: int
    cells: list = field(default_factory=list)
    output_phases: np.ndarray = None

    def __post_init__(self):
        if self.output_phases is None:
            self.output_phases = np.zeros(self.n)
        self.output_phases = np.asarray(self.output_phases, dtype=np.float64)

    def validate(self):
        if self.n < 2:
            raise ValidationError(f"mode count must be ≥ 2, got {self.n}")
        expected = self.n * (self.n - 1) // 2
        if len(self.cells) != expected:
            raise ValidationError(
                f"expected {expected} cells for n={self.n}, got {len(self.cells)}"
            )
        seen = set()
        for cell in self.cells:
            cell.address.validate(self.n)
            if cell.address in seen:
                raise ValidationError(f"duplicate cell address {cell.address}")
            seen.add(cell.address)
            if not (math.isfinite(cell.theta) and math.isfinite(cell.phi)):
                raise ValidationError(f"non-finite phase at {cell.address}")
            if not (0.0 <= cell.theta < TWO_PI and 0.0 <= cell.phi < TWO_PI):
                raise ValidationError(f"phase outside [0, 2π) at {cell.address}")
        if self.output_phases.shape != (self.n,):
            raise ValidationError("output_phases length must equal n")
        if not np.all(np.isfinite(self.output_phases)):
            raise ValidationError("output_phases contain non-finite values")
        return self

    def to_dict(self):
        return {
            "n": self.n,
            "cells": [
                {
                    "column": c.address.column,
                    "top_mode": c.address.top_mode,
                    "theta": c.theta,
                    "phi": c.phi,
                }
                for c in self.cells
            ],
            "output_phases": self.output_phases.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            cells = [
                UnitCellSettings(
                    UnitCellAddress(int(c["column"]), int(c["top_mode"])),
                    float(c["theta"]),
                    float(c["phi"]),
                )
                for c in d["cells"]
            ]
            settings = cls(int(d["n"]), cells, np.asarray(d["output_phases"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed mesh document: {exc}") from exc
        return settings.validate()

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


def mesh_topology(n):
    """Addresses of the rectangular mesh, column-major evaluation order.

    Even columns couple even top modes, odd columns odd top modes; the total
    is n(n−1)/2 cells over n columns and every input can reach every output.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValidationError(f"mode count must be an integer ≥ 2, got {n!r}")
    addrs = []
    for column in range(n):
        for top_mode in range(column % 2, n - 1, 2):
            addrs.append(UnitCellAddress(column, top_mode))
    return addrs


def identity_settings(n):
    """Mesh settings routing every mode straight through.

    All cells sit at BAR_STATE, which is exactly the identity cell; unlike
    decompose(I) this stays loss-free on couplers with matched imbalance, so
    it is the right program for insertion-loss style measurements.
    """
    theta, phi = BAR_STATE
    cells = [UnitCellSettings(addr, theta, phi) for addr in mesh_topology(n)]
    return MeshSettings(n, cells).validate()


def unit_cell_matrix(theta, phi, kappa1=0.5, kappa2=0.5):
    """2×2 transfer matrix of one unit cell under the frozen convention.

    kappa1 is the input-side directional coupler, kappa2 the output-side one;
    the ideal cell has both at 0.5.
    """
    a1, b1 = math.sqrt(1.0 - kappa1), math.sqrt(kappa1)
    a2, b2 = math.sqrt(1.0 - kappa2), math.sqrt(kappa2)
    eth = np.exp(1j * theta)
    eph = np.exp(1j * phi)
    return np.array(
        [
            [(a1 * a2 * eth - b1 * b2) * eph, 1j * (a2 * b1 * eth + a1 * b2)],
            [1j * (a1 * b2 * eth + a2 * b1) * eph, a1 * a2 - b1 * b2 * eth],
        ]
    )


def _cell_arrays(settings):
    """Cells in evaluation order as flat arrays for the product kernel."""
    order = sorted(
        range(len(settings.cells)),
        key=lambda i: (settings.cells[i].address.column, settings.cells[i].address.top_mode),
    )
    modes = np.array([settings.cells[i].address.top_mode for i in order], dtype=np.int64)
    thetas = np.array([settings.cells[i].theta for i in order])
    phis = np.array([settings.cells[i].phi for i in order])
    return order, modes, thetas, phis


def reconstruct(settings):
    """Forward map: multiply out the mesh into its N×N unitary."""
    settings.validate()
    _, modes, thetas, phis = _cell_arrays(settings)
    half = np.full(len(modes), 0.5)
    m = np.eye(settings.n, dtype=np.complex128)
    apply_cells(m, modes, thetas, phis, half, half)
    return np.exp(1j * settings.output_phases)[:, None] * m


def decompose(u):
    """Factor a unitary into rectangular-mesh settings (Clements scheme).

    Guarantees reconstruct(decompose(u)) == u to ~1e-12 and emits exactly the
    mesh_topology(n) cell set with all phases wrapped to [0, 2π).
    """
    u = assert_unitary(u)
    n = u.shape[0]
    if n < 2:
        raise ValidationError("decompose requires at least 2 modes")
    v = np.array(u, dtype=np.complex128, copy=True)
    modes, thetas, phis, is_left = nulling_sweep(v)
    d = np.diagonal(v).copy()

    # Commute each left-elimination cell through the residual diagonal:
    # cell(θ,φ)† · diag(d1,d2) = diag(d1',d2') · cell(θ,φ') with
    # φ' = arg d1 − arg d2, d1' = −e^{−i(θ+φ)} d2, d2' = −e^{−iθ} d2.
    left_idx = np.nonzero(is_left)[0]
    right_idx = np.nonzero(~is_left)[0]
    converted = []
    for i in left_idx[::-1]:
        m = int(modes[i])
        theta = thetas[i]
        phi = phis[i]
        phi_new = np.angle(d[m]) - np.angle(d[m + 1])
        d1 = -np.exp(-1j * (theta + phi)) * d[m + 1]
        d2 = -np.exp(-1j * theta) * d[m + 1]
        d[m], d[m + 1] = d1, d2
        converted.append((m, theta, phi_new))

    # Physical order, input side first: right eliminations in elimination
    # order, then commuted left eliminations (innermost first).
    physical = [(int(modes[i]), thetas[i], phis[i]) for i in right_idx] + converted

    # Greedy column scheduling reproduces the rectangular arrangement.
    next_free = [0] * n
    cells = []
    for m, theta, phi in physical:
        column = max(next_free[m], next_free[m + 1])
        if column % 2 != m % 2:
            column += 1
        next_free[m] = next_free[m + 1] = column + 1
        cells.append(
            UnitCellSettings(
                UnitCellAddress(column, m), wrap_phase(theta), wrap_phase(phi)
            )
        )
    cells.sort(key=lambda c: (c.address.column, c.address.top_mode))
    output_phases = np.array([wrap_phase(p) for p in np.angle(d)])
    return MeshSettings(n, cells, output_phases).validate()
