"""Depth-first traversal of the lattice of partial derivatives.

The node labelled by monomial ``x^s`` (degree ``k``) is characterised by the
``C(n, k)`` permanents ``Per(U[r_s, [n] - J])`` for every set ``J`` of ``n - k``
still-undifferentiated columns.  All nodes on the current root-to-node path fit
in one vector of ``2**n`` complex numbers indexed by the bitmask of ``J``: a
node of degree ``k`` owns the popcount-``(n - k)`` band, and differentiating
by ``x_i`` fills the band below from it.  Children are visited in ascending
mode order from a non-decreasing stack, so each monomial is reached once.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .core import (
    COMPLEX_BYTES,
    InputError,
    OpCounter,
    as_interferometer,
    check_memory,
    normalization_factor,
)


class StopTraversal(Exception):
    """Raise from a visitor to end a traversal early without an error."""


def peak_memory_coefficients(n):
    return 1 << n


def peak_memory_bytes(n, slot_bytes=COMPLEX_BYTES):
    return peak_memory_coefficients(n) * slot_bytes


def allocate_coefficients(n, stats=None, memory_cap=None):
    """The single coefficient vector of a traversal, root entry set to 1."""
    slots = peak_memory_coefficients(n)
    check_memory(slots, f"coefficient vector for n={n}", memory_cap)
    v = np.zeros(slots, dtype=np.complex128)
    v[-1] = 1.0
    if stats is not None:
        stats.coefficient_slots += slots
    return v


def update_coefficients(u, i, k, v):
    """Differentiate the current node by ``x_i`` to reach level ``k``, in place.

    Reads the popcount-``(n-k+1)`` band of ``v`` and overwrites the
    popcount-``(n-k)`` band; returns the number of complex multiply-adds,
    ``k * C(n, k)``.
    """
    n = v.shape[0].bit_length() - 1
    if not 1 <= k <= n:
        raise InputError(f"target level k={k} outside [1, {n}]")
    row = np.ascontiguousarray(u[i, :n], dtype=np.complex128)
    return _kernels.update_band(row, n, k, v)


class NodeEvent:
    """One visited node.

    ``coefficients`` is a read-only copy of the node's band in ascending mask
    order; it is only meaningful while the traversal is paused on this node.
    """

    __slots__ = ("state", "level", "is_leaf", "_v", "_n")

    def __init__(self, state, level, v, n):
        self.state = state
        self.level = level
        self.is_leaf = level == n
        self._v = v
        self._n = n

    @property
    def band(self):
        """Masks of the node's coefficients, ascending."""
        return _kernels.band_indices(self._n)[self._n - self.level]

    @property
    def coefficients(self):
        out = self._v[self.band]
        out.flags.writeable = False
        return out

    def coefficient(self, mask):
        return complex(self._v[mask])

    @property
    def leaf_value(self):
        return complex(self._v[0])

    def __repr__(self):
        return f"NodeEvent(state={self.state}, level={self.level}, is_leaf={self.is_leaf})"


def iter_nodes(u, n, stats=None, on_push=None, memory_cap=None):
    """Yield a :class:`NodeEvent` for every non-root node in depth-first order.

    ``on_push(stack, matrix)`` is consulted after each push and returns the
    matrix used for that node and its subtree (the parent's matrix is passed
    in); it exists for feedforward.
    """
    u = as_interferometer(u, n)
    m = u.shape[0]
    v = allocate_coefficients(n, stats, memory_cap)
    if n == 0:
        return
    stack = []
    occ = [0] * m
    mats = [u]
    nxt = 0
    while True:
        if nxt >= m or len(stack) == n:
            if not stack:
                return
            a = stack.pop()
            occ[a] -= 1
            mats.pop()
            nxt = a + 1
            continue
        stack.append(nxt)
        occ[nxt] += 1
        k = len(stack)
        mat = mats[-1] if on_push is None else on_push(stack, mats[-1])
        mats.append(mat)
        ops = _kernels.update_band(mat[nxt], n, k, v)
        if stats is not None:
            stats.multiply_adds += ops
            stats.nodes += 1
            if k == n:
                stats.leaves += 1
        yield NodeEvent(tuple(occ), k, v, n)


def traverse(u, n, visitor, stats=None, on_push=None, memory_cap=None):
    """Call ``visitor(event)`` on every non-root node; see :func:`iter_nodes`."""
    try:
        for event in iter_nodes(u, n, stats=stats, on_push=on_push, memory_cap=memory_cap):
            visitor(event)
    except StopTraversal:
        pass


def _iter_amplitudes_python(u, n, stats, memory_cap):
    for ev in iter_nodes(u, n, stats=stats, memory_cap=memory_cap):
        if ev.is_leaf:
            yield ev.state, ev.leaf_value / normalization_factor(ev.state)


def _iter_amplitudes_jit(u, n, stats, memory_cap, chunk):
    m = u.shape[0]
    v = allocate_coefficients(n, stats, memory_cap)
    # sqrt of the factorial product, matching normalization_factor bit for bit
    # while the product is exact in double precision
    fact = np.array([float(math.factorial(k)) for k in range(n + 1)])
    stack = np.zeros(n, dtype=np.int64)
    state = np.zeros(3, dtype=np.int64)
    leaf_stacks = np.empty((chunk, n), dtype=np.int64)
    leaf_vals = np.empty(chunk, dtype=np.complex128)
    counter = np.zeros(2, dtype=np.int64)
    rows = np.repeat(np.arange(chunk), n)
    while not state[2]:
        before = counter.copy()
        cnt = _kernels.dfs_chunk(u, n, v, stack, state, leaf_stacks, leaf_vals, counter)
        if stats is not None:
            stats.multiply_adds += int(counter[0] - before[0])
            stats.nodes += int(counter[1] - before[1])
            stats.leaves += cnt
        if cnt == 0:
            continue
        occ = np.zeros((cnt, m), dtype=np.int64)
        np.add.at(occ, (rows[: cnt * n], leaf_stacks[:cnt].ravel()), 1)
        norms = np.sqrt(np.prod(fact[occ], axis=1))
        # componentwise, as Python's complex / float does
        vals = leaf_vals[:cnt]
        amps = (vals.real / norms + 1j * (vals.imag / norms)).tolist()
        yield from zip(map(tuple, occ.tolist()), amps)


def iterate_amplitudes(u, n, stats=None, memory_cap=None, chunk=4096):
    """Lazily yield ``(state, amplitude)`` for all ``C(n+m-1, n)`` outputs of ``1_n``.

    Order is the depth-first leaf order.  With the numba backend the walk runs
    compiled and hands leaves back in chunks; the numpy backend walks in Python.
    """
    u = as_interferometer(u, n)
    m = u.shape[0]
    if n == 0:
        allocate_coefficients(0, stats, memory_cap)
        yield (0,) * m, 1.0 + 0.0j
        return
    if _kernels.get_backend() == "numba":
        yield from _iter_amplitudes_jit(u, n, stats, memory_cap, chunk)
    else:
        yield from _iter_amplitudes_python(u, n, stats, memory_cap)


def distribution(u, n, stats=None, memory_cap=None):
    """All amplitudes as a dict keyed by state (traversal order)."""
    return dict(iterate_amplitudes(u, n, stats=stats, memory_cap=memory_cap))


__all__ = [
    "NodeEvent",
    "OpCounter",
    "StopTraversal",
    "allocate_coefficients",
    "distribution",
    "iter_nodes",
    "iterate_amplitudes",
    "peak_memory_bytes",
    "peak_memory_coefficients",
    "traverse",
    "update_coefficients",
]
