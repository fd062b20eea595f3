"""Complex-matrix foundation: Haar sampling, unitarity checks, and the
amplitude-fidelity metric used to score intensity-only measurements.

All functions are pure and operate on plain numpy arrays. Unitaries are
complex128 square arrays; amplitude matrices are non-negative real arrays
whose columns have unit Euclidean norm.
"""

import json

import numpy as np

from .errors import ValidationError

UNITARY_TOL = 1e-10
AMPLITUDE_COLUMN_TOL = 1e-9
JSON_READ_TOL = 1e-8


def _as_complex_matrix(m):
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValidationError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValidationError("matrix contains non-finite entries")
    return m


def unitarity_deviation(m):
    """Max-norm deviation of m†m from the identity."""
    m = _as_complex_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"matrix is not square: shape {m.shape}")
    n = m.shape[0]
    return float(np.max(np.abs(m.conj().T @ m - np.eye(n))))


def is_unitary(m, tol):
    """True iff m is square and ‖m†m − I‖_max ≤ tol."""
    return unitarity_deviation(m) <= tol


def assert_unitary(m, tol=UNITARY_TOL):
    """Validate m as a unitary, raising ValidationError with the deviation."""
    m = _as_complex_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"matrix is not square: shape {m.shape}")
    dev = unitarity_deviation(m)
    if dev > tol:
        raise ValidationError(
            f"matrix is not unitary: ‖U†U − I‖_max = {dev:.3e} > {tol:.1e}"
        )
    return m


def haar_random_unitary(n, seed):
    """Draw an n×n Haar-random unitary, deterministic in (n, seed).

    Uses QR of a complex Ginibre matrix with the R-diagonal phase correction
    (Mezzadri construction), so the distribution is exactly Haar rather than
    the biased raw-QR ensemble. The RNG is numpy's PCG64, which is seedable
    and stable across platforms.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"mode count must be a positive integer, got {n!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def validate_amplitude_matrix(m, tol=AMPLITUDE_COLUMN_TOL):
    """Check non-negativity and unit column norms of a measured |U| matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"amplitude matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("amplitude matrix contains non-finite entries")
    if np.any(m < 0):
        raise ValidationError("amplitude matrix has negative entries")
    norms = np.linalg.norm(m, axis=0)
    if np.any(np.abs(norms - 1.0) > tol):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValidationError(
            f"amplitude matrix columns are not unit-norm (worst deviation {worst:.3e})"
        )
    return m


def normalize_columns(m):
    """L2-normalize each column; raises on identically-zero columns."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0):
        raise ValidationError("cannot normalize a matrix with an all-zero column")
    return m / norms


def amplitude_fidelity(target, measured):
    """F = Tr(|U|ᵀ·|U_exp|)/N between a target unitary and measured moduli.

    Both factors have unit-norm columns, so 0 ≤ F ≤ 1 by Cauchy-Schwarz and
    F = 1 exactly when the measured moduli equal the target's.
    """
    target = assert_unitary(target)
    measured = validate_amplitude_matrix(measured)
    if target.shape != measured.shape:
        raise ValidationError(
            f"dimension mismatch: target {target.shape} vs measured {measured.shape}"
        )
    n = target.shape[0]
    return float(np.sum(np.abs(target) * measured) / n)


def unitary_to_dict(u):
    u = _as_complex_matrix(u)
    return {
        "n": int(u.shape[0]),
        "re": u.real.tolist(),
        "im": u.imag.tolist(),
    }


def unitary_from_dict(d, check=True, tol=JSON_READ_TOL):
    try:
        n = int(d["n"])
        u = np.asarray(d["re"], dtype=np.float64) + 1j * np.asarray(d["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed unitary document: {exc}") from exc
    if u.shape != (n, n):
        raise ValidationError(f"unitary document shape {u.shape} does not match n={n}")
    u = _as_complex_matrix(u)
    if check:
        assert_unitary(u, tol=tol)
    return u


def save_unitary(u, path):
    with open(path, "w") as fh:
        json.dump(unitary_to_dict(u), fh, sort_keys=True)
        fh.write("\n")


def load_unitary(path, check=True, tol=JSON_READ_TOL):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return unitary_from_dict(d, check=check, tol=tol)
