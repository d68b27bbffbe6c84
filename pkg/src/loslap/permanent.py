"""Permanents and the permanent-based amplitude oracle."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .core import (
    InputError,
    as_interferometer,
    fock_to_assignment,
    iter_fock_states,
    normalization_factor,
)


def permanent(a):
    """Permanent by Ryser's formula over Gray-code ordered column subsets.

    ``O(2**k * k)`` for a ``k x k`` matrix; the empty matrix has permanent 1.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"permanent needs a square matrix, got shape {a.shape}")
    return _kernels.ryser(a)


def permanent_glynn(a):
    """Permanent by Glynn's formula with Gray-code sign flips."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"permanent needs a square matrix, got shape {a.shape}")
    k = a.shape[0]
    if k == 0:
        return 1.0 + 0.0j
    # delta starts all +1; column 0 is never flipped
    rowsum = a.sum(axis=1)
    total = np.prod(rowsum)
    sign = 1
    delta = np.ones(k, dtype=int)
    prev = 0
    for g in range(1, 1 << (k - 1)):
        gray = g ^ (g >> 1)
        j = (gray ^ prev).bit_length()  # flipped column, in 1..k-1
        prev = gray
        delta[j] = -delta[j]
        rowsum += 2 * delta[j] * a[:, j]
        sign = -sign
        total += sign * np.prod(rowsum)
    return complex(total / (1 << (k - 1)))


def repeated_submatrix(u, rows, cols):
    """``out[i, j] = u[rows[i], cols[j]]``, repetitions allowed."""
    u = np.asarray(u)
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    if rows.shape != cols.shape:
        raise InputError(f"row and column assignments differ in length: {len(rows)} vs {len(cols)}")
    if rows.size and (rows.min() < 0 or rows.max() >= u.shape[0]):
        raise InputError(f"row index out of range for a matrix with {u.shape[0]} rows")
    if cols.size and (cols.min() < 0 or cols.max() >= u.shape[1]):
        raise InputError(f"column index out of range for a matrix with {u.shape[1]} columns")
    return u[np.ix_(rows, cols)]


def amplitude(u, s, t):
    """``<s|U|t>`` as a permanent of the repeated submatrix over both normalisations."""
    if sum(s) != sum(t):
        raise InputError(f"photon counts differ: |s|={sum(s)}, |t|={sum(t)}")
    u = np.asarray(u, dtype=np.complex128)
    if len(s) != u.shape[0]:
        raise InputError(f"output state has {len(s)} modes, matrix has {u.shape[0]} rows")
    if len(t) > u.shape[1] and any(t[u.shape[1]:]):
        raise InputError(f"input state occupies columns beyond the matrix's {u.shape[1]}")
    sub = repeated_submatrix(u, fock_to_assignment(s), fock_to_assignment(t))
    return permanent(sub) / (normalization_factor(s) * normalization_factor(t))


def full_distribution_naive(u, n):
    """Yield ``(state, amplitude)`` for input ``1_n``, one permanent per output state."""
    u = as_interferometer(u, n)
    m = u.shape[0]
    cols = list(range(n))
    for s in iter_fock_states(m, n):
        sub = u[np.ix_(fock_to_assignment(s), cols)]
        yield s, permanent(sub) / normalization_factor(s)
