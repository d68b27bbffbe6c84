"""Hot loops: the coefficient-band update, the leaf-only depth-first walk and Ryser.

Two implementations live here.  The numba one is used when numba imports and
``LOSLAP_BACKEND`` is unset or ``"numba"``; setting ``LOSLAP_BACKEND=numpy``
selects the vectorised numpy path.  Both accumulate in the same order, so on a
given machine they agree to the last bit except where LLVM contracts
multiply-adds.
"""

from __future__ import annotations

import contextlib
import os
from functools import lru_cache

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

ENV_FLAG = "LOSLAP_BACKEND"
BACKENDS = ("numba", "numpy")


def _default_backend():
    requested = os.environ.get(ENV_FLAG, "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(f"{ENV_FLAG} must be 'numba' or 'numpy', got {requested!r}")
    return "numba" if HAS_NUMBA else "numpy"


_backend = _default_backend()


def get_backend():
    return _backend


def set_backend(name):
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not importable")
    _backend = name


@contextlib.contextmanager
def use_backend(name):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


# ---------------------------------------------------------------------------
# numpy path


@lru_cache(maxsize=32)
def band_indices(n):
    """Indices of a length-2**n vector grouped by popcount, each band ascending."""
    idx = np.arange(1 << n, dtype=np.int64)
    weights = np.zeros(1 << n, dtype=np.int64)
    for p in range(n):
        weights += (idx >> p) & 1
    bands = []
    for w in range(n + 1):
        band = idx[weights == w]
        band.flags.writeable = False
        bands.append(band)
    return tuple(bands)


def _update_band_np(row, n, k, v):
    band = band_indices(n)[n - k]
    acc = np.zeros(band.shape[0], dtype=np.complex128)
    count = 0
    for p in range(n):
        bit = np.int64(1) << p
        free = (band & bit) == 0
        sel = band[free]
        count += sel.shape[0]
        acc[free] += row[p] * v[sel | bit]
    v[band] = acc
    return count


def _ryser_np(a):
    k = a.shape[0]
    if k == 0:
        return 1.0 + 0.0j
    rowsum = np.zeros(k, dtype=np.complex128)
    total = 0.0 + 0.0j
    prev = 0
    size = 0
    for g in range(1, 1 << k):
        gray = g ^ (g >> 1)
        diff = gray ^ prev
        j = diff.bit_length() - 1
        if gray & diff:
            rowsum += a[:, j]
            size += 1
        else:
            rowsum -= a[:, j]
            size -= 1
        prev = gray
        term = np.prod(rowsum)
        total += term if (k - size) % 2 == 0 else -term
    return complex(total)


# ---------------------------------------------------------------------------
# numba path

if HAS_NUMBA:

    @njit(cache=True)
    def _update_band_nb(row, n, k, v):
        lim = (np.int64(1) << n) - 1
        w = n - k
        count = 0
        j = (np.int64(1) << w) - 1
        while j <= lim:
            acc = 0j
            free = j ^ lim
            p = 0
            while free:
                if free & 1:
                    acc += row[p] * v[j | (np.int64(1) << p)]
                    count += 1
                free >>= 1
                p += 1
            v[j] = acc
            if w == 0:
                break
            # Gosper's hack: next integer with the same popcount
            c = j & -j
            r = j + c
            j = (((r ^ j) >> 2) // c) | r
        return count

    @njit(cache=True)
    def _dfs_chunk_nb(u, n, v, stack, state, leaf_stacks, leaf_vals, counter):
        m = u.shape[0]
        depth = state[0]
        nxt = state[1]
        cap = leaf_vals.shape[0]
        out = 0
        while True:
            if nxt >= m or depth == n:
                if depth == 0:
                    state[2] = 1
                    break
                depth -= 1
                nxt = stack[depth] + 1
                continue
            stack[depth] = nxt
            depth += 1
            counter[0] += _update_band_nb(u[nxt], n, depth, v)
            counter[1] += 1
            if depth == n:
                for t in range(n):
                    leaf_stacks[out, t] = stack[t]
                leaf_vals[out] = v[0]
                out += 1
                if out == cap:
                    break
        state[0] = depth
        state[1] = nxt
        return out

    @njit(cache=True)
    def _ryser_nb(a):
        k = a.shape[0]
        if k == 0:
            return 1.0 + 0.0j
        rowsum = np.zeros(k, dtype=np.complex128)
        total = 0j
        prev = 0
        size = 0
        for g in range(1, 1 << k):
            gray = g ^ (g >> 1)
            diff = gray ^ prev
            j = 0
            while (diff >> j) != 1:
                j += 1
            if gray & diff:
                for i in range(k):
                    rowsum[i] += a[i, j]
                size += 1
            else:
                for i in range(k):
                    rowsum[i] -= a[i, j]
                size -= 1
            prev = gray
            term = 1.0 + 0.0j
            for i in range(k):
                term *= rowsum[i]
            if (k - size) % 2 == 0:
                total += term
            else:
                total -= term
        return total


# ---------------------------------------------------------------------------
# dispatch


def update_band(row, n, k, v):
    """Fill the popcount-(n-k) band of ``v`` from the band above; return multiply-adds.

    ``row`` is the matrix row of the differentiation mode.  Entry ``j`` receives
    ``sum(row[p] * v[j | 1 << p])`` over the bits ``p`` absent from ``j``.
    """
    if _backend == "numba":
        return int(_update_band_nb(row, n, k, v))
    return _update_band_np(row, n, k, v)


def ryser(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if _backend == "numba":
        return complex(_ryser_nb(a))
    return _ryser_np(a)


def dfs_chunk(u, n, v, stack, state, leaf_stacks, leaf_vals, counter):
    """Resume the leaf walk until ``leaf_vals`` is full or the lattice is exhausted.

    Only the numba backend provides this; the numpy backend walks in Python.
    """
    return int(_dfs_chunk_nb(u, n, v, stack, state, leaf_stacks, leaf_vals, counter))
