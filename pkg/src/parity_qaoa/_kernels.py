"""Hot loops for the subspace evaluator.

Jitted with numba when available; the numpy fallbacks compute the same
values (slower) so the engine works without a compiler too.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def rot_axis(psi, axis, c, s):
    """In-place RX(angle) with cos/sin (c, s) on one tensor axis."""
    step = 1 << axis
    js = -1j * s
    for base in range(0, psi.shape[0], 2 * step):
        for z in range(base, base + step):
            a = psi[z]
            b = psi[z + step]
            psi[z] = c * a + js * b
            psi[z + step] = js * a + c * b


@njit(cache=True)
def rot_axis_pair(psi, axis_hi, axis_lo, c, s):
    """Fused in-place RX on two axes (axis_hi > axis_lo); one memory pass."""
    s_hi = 1 << axis_hi
    s_lo = 1 << axis_lo
    cc = c * c
    jsc = -1j * s * c
    ss = -s * s
    for b1 in range(0, psi.shape[0], 2 * s_hi):
        for b2 in range(b1, b1 + s_hi, 2 * s_lo):
            for z in range(b2, b2 + s_lo):
                a00 = psi[z]
                a01 = psi[z + s_lo]
                a10 = psi[z + s_hi]
                a11 = psi[z + s_hi + s_lo]
                psi[z] = cc * a00 + jsc * (a01 + a10) + ss * a11
                psi[z + s_lo] = cc * a01 + jsc * (a00 + a11) + ss * a10
                psi[z + s_hi] = cc * a10 + jsc * (a00 + a11) + ss * a01
                psi[z + s_hi + s_lo] = cc * a11 + jsc * (a01 + a10) + ss * a00


@njit(cache=True)
def build_phase(out, e_field, e_penalty, gamma, omega):
    """out[v] = exp(-i (gamma * e_field[v] + omega * e_penalty[v]))."""
    for v in range(out.shape[0]):
        theta = gamma * e_field[v] + omega * e_penalty[v]
        out[v] = np.cos(theta) - 1j * np.sin(theta)


@njit(cache=True)
def diag_mult(psi, diag):
    for v in range(psi.shape[0]):
        psi[v] *= diag[v]


@njit(cache=True)
def expectation(psi, energies):
    acc = 0.0
    for v in range(psi.shape[0]):
        acc += (psi[v].real * psi[v].real + psi[v].imag * psi[v].imag) * energies[v]
    return acc


def apply_all_axis_rotations(psi: np.ndarray, n_axes: int, c: float, s: float) -> None:
    """RX with (c, s) on every axis of a 2^n amplitude array, in place."""
    axis = 0
    while axis + 1 < n_axes:
        rot_axis_pair(psi, axis + 1, axis, c, s)
        axis += 2
    if axis < n_axes:
        rot_axis(psi, axis, c, s)
