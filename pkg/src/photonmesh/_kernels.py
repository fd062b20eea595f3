"""Numba-accelerated inner loops for mesh decomposition and transfer products.

Both kernels fall back to the pure-Python implementations when numba is not
importable, so the package stays usable (just slower) without it.
"""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def nulling_sweep(V):
    """Run the rectangular nulling sweep in place, reducing V to a diagonal.

    Returns per-elimination arrays (mode, theta, phi, applied-from-left flag)
    in elimination order. Left eliminations still need to be commuted through
    the residual diagonal by the caller.
    """
    n = V.shape[0]
    n_cells = n * (n - 1) // 2
    modes = np.empty(n_cells, dtype=np.int64)
    thetas = np.empty(n_cells, dtype=np.float64)
    phis = np.empty(n_cells, dtype=np.float64)
    is_left = np.zeros(n_cells, dtype=np.bool_)
    idx = 0
    for l in range(n - 1):
        if l % 2 == 0:
            # Null V[r, m] by mixing columns (m, m+1) from the right.
            for j in range(l + 1):
                r = n - 1 - j
                m = l - j
                a = V[r, m]
                b = V[r, m + 1]
                aa = abs(a)
                ab = abs(b)
                theta = 2.0 * math.atan2(ab, aa)
                if aa == 0.0 or ab == 0.0:
                    phi = 0.0
                else:
                    ratio = -b / a
                    phi = -math.atan2(ratio.imag, ratio.real)
                s = math.sin(0.5 * theta)
                c = math.cos(0.5 * theta)
                g = -1j * np.exp(-0.5j * theta)
                ep = np.exp(-1j * phi)
                t00 = g * ep * s
                t01 = g * ep * c
                t10 = g * c
                t11 = -g * s
                for row in range(n):
                    x = V[row, m]
                    y = V[row, m + 1]
                    V[row, m] = t00 * x + t10 * y
                    V[row, m + 1] = t01 * x + t11 * y
                modes[idx] = m
                thetas[idx] = theta
                phis[idx] = phi
                idx += 1
        else:
            # Null V[m+1, col] by mixing rows (m, m+1) from the left.
            for j in range(l + 1):
                col = j
                m = n - 2 - l + j
                a = V[m, col]
                b = V[m + 1, col]
                aa = abs(a)
                ab = abs(b)
                theta = 2.0 * math.atan2(aa, ab)
                if aa == 0.0 or ab == 0.0:
                    phi = 0.0
                else:
                    ratio = b / a
                    phi = math.atan2(ratio.imag, ratio.real)
                s = math.sin(0.5 * theta)
                c = math.cos(0.5 * theta)
                g = 1j * np.exp(0.5j * theta)
                ep = np.exp(1j * phi)
                t00 = g * ep * s
                t01 = g * c
                t10 = g * ep * c
                t11 = -g * s
                for colv in range(n):
                    x = V[m, colv]
                    y = V[m + 1, colv]
                    V[m, colv] = t00 * x + t01 * y
                    V[m + 1, colv] = t10 * x + t11 * y
                modes[idx] = m
                thetas[idx] = theta
                phis[idx] = phi
                is_left[idx] = True
                idx += 1
    return modes, thetas, phis, is_left


@njit(cache=True)
def apply_cells(M, modes, thetas, phis, kappa1, kappa2):
    """Left-multiply M by embedded unit cells, input side first.

    Cell i couples modes (modes[i], modes[i]+1) with internal phase thetas[i],
    external phase phis[i], and directional-coupler power ratios
    (kappa1[i], kappa2[i]).
    """
    n = M.shape[1]
    for i in range(modes.shape[0]):
        m = modes[i]
        a1 = math.sqrt(1.0 - kappa1[i])
        b1 = math.sqrt(kappa1[i])
        a2 = math.sqrt(1.0 - kappa2[i])
        b2 = math.sqrt(kappa2[i])
        eth = np.exp(1j * thetas[i])
        eph = np.exp(1j * phis[i])
        t00 = (a1 * a2 * eth - b1 * b2) * eph
        t01 = 1j * (a2 * b1 * eth + a1 * b2)
        t10 = 1j * (a1 * b2 * eth + a2 * b1) * eph
        t11 = a1 * a2 - b1 * b2 * eth
        for col in range(n):
            x = M[m, col]
            y = M[m + 1, col]
            M[m, col] = t00 * x + t01 * y
            M[m + 1, col] = t10 * x + t11 * y
    return M
