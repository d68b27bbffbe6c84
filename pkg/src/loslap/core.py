"""Fock states, mode assignments, subset masks and random interferometers.

Conventions used across the package:

* a Fock state is a tuple of non-negative ints, one entry per mode;
* modes and input columns are 0-based;
* a subset mask ``j`` over ``n`` input columns has bit ``p`` set when column
  ``p`` is still an undifferentiated factor, so ``2**n - 1`` is the full product
  and ``0`` the fully differentiated leaf coefficient.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

FockState = tuple  # tuple[int, ...]

#: Largest photon count a subset mask can index (64-bit word minus one).
MAX_PHOTONS = 63

#: Default refusal threshold for materialising a list of states.
MAX_ENUMERATED_STATES = 50_000_000

#: Bytes per complex coefficient (two doubles).
COMPLEX_BYTES = 16

MEMORY_CAP_ENV = "LOSLAP_MEMORY_CAP_BYTES"
DEFAULT_MEMORY_CAP = 8 * 2**30


class SimulationError(Exception):
    """Base class for errors raised by this package."""


class InputError(SimulationError, ValueError):
    """An argument is malformed or inconsistent with another."""


class BudgetError(SimulationError):
    """A computation would exceed a configured size or memory budget."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


def memory_cap_bytes():
    """Refusal threshold for coefficient storage, overridable through the environment."""
    raw = os.environ.get(MEMORY_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_MEMORY_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"{MEMORY_CAP_ENV} must be an integer byte count, got {raw!r}") from None
    if cap <= 0:
        raise InputError(f"{MEMORY_CAP_ENV} must be positive, got {cap}")
    return cap


def check_memory(slots, what, cap=None):
    cap = memory_cap_bytes() if cap is None else cap
    need = slots * COMPLEX_BYTES
    if need > cap:
        raise BudgetError(
            f"{what} needs {slots} complex slots ({need} bytes), above the cap of {cap} bytes",
            required=need,
        )


@dataclass
class OpCounter:
    """Instrumentation filled in by the engines.

    ``multiply_adds`` counts complex multiply-accumulate steps; ``flops`` reports
    them as separate multiplications and additions, the unit of the cost model.
    """

    multiply_adds: int = 0
    coefficient_slots: int = 0
    nodes: int = 0
    leaves: int = 0

    @property
    def flops(self):
        return 2 * self.multiply_adds


def state_count(m, n):
    """Number of ways to place ``n`` photons in ``m`` modes."""
    if m < 1 or n < 0:
        raise InputError(f"need m >= 1 and n >= 0, got m={m}, n={n}")
    return math.comb(n + m - 1, n)


def iter_fock_states(m, n):
    """Yield every ``n``-photon state on ``m`` modes, lexicographically ascending."""
    if m < 1 or n < 0:
        raise InputError(f"need m >= 1 and n >= 0, got m={m}, n={n}")
    state = [0] * m

    def fill(mode, left):
        if mode == m - 1:
            state[mode] = left
            yield tuple(state)
            return
        for c in range(left + 1):
            state[mode] = c
            yield from fill(mode + 1, left - c)

    yield from fill(0, n)


def enumerate_fock_states(m, n, limit=MAX_ENUMERATED_STATES):
    count = state_count(m, n)
    if count > limit:
        raise BudgetError(
            f"{count} states for m={m}, n={n} exceeds the enumeration limit {limit}",
            required=count,
        )
    return list(iter_fock_states(m, n))


def photon_count(state):
    return sum(state)


def fock_to_assignment(state):
    """Sorted list of occupied modes, mode ``i`` repeated ``state[i]`` times."""
    out = []
    for mode, occ in enumerate(state):
        if occ < 0:
            raise InputError(f"negative occupation {occ} on mode {mode}")
        out.extend([mode] * occ)
    return out


def assignment_to_fock(modes, m):
    state = [0] * m
    for mode in modes:
        if not 0 <= mode < m:
            raise InputError(f"mode {mode} outside [0, {m})")
        state[mode] += 1
    return tuple(state)


_EXACT_FACTORIAL_LIMIT = 20


def log_factorial(k):
    return math.lgamma(k + 1)


def normalization_factor(state):
    """``sqrt(prod(s_i!))``; exact integers up to 20!, log-space above."""
    if all(s <= _EXACT_FACTORIAL_LIMIT for s in state):
        prod = 1
        for s in state:
            prod *= math.factorial(s)
        return math.sqrt(prod)
    return math.exp(0.5 * sum(log_factorial(s) for s in state))


def sqrt_factorial_table(n):
    """``table[k] = sqrt(k!)`` for ``k`` in ``0..n``."""
    return np.array([math.sqrt(math.factorial(k)) if k <= _EXACT_FACTORIAL_LIMIT
                     else math.exp(0.5 * log_factorial(k)) for k in range(n + 1)])


def popcount(j):
    return bin(j).count("1")


def next_combination(j):
    """Smallest integer above ``j`` with the same number of set bits."""
    if j <= 0:
        raise InputError("next_combination needs a positive mask")
    t = j | (j - 1)
    ctz = (j & -j).bit_length() - 1
    return (t + 1) | (((~t & -~t) - 1) >> (ctz + 1))


def iter_masks(n, weight):
    """All ``n``-bit masks with ``weight`` set bits, ascending."""
    if weight == 0:
        yield 0
        return
    lim = (1 << n) - 1
    j = (1 << weight) - 1
    while j <= lim:
        yield j
        j = next_combination(j)


def mask_columns(j):
    """Columns (0-based) whose bits are set in ``j``."""
    out = []
    p = 0
    while j:
        if j & 1:
            out.append(p)
        j >>= 1
        p += 1
    return out


def haar_random_unitary(m, seed):
    """Haar-distributed ``m x m`` unitary from QR of a complex Ginibre matrix."""
    if m < 1:
        raise InputError(f"need m >= 1, got {m}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def as_interferometer(u, n=None):
    """Return ``u`` as a C-contiguous complex ``m x n`` array.

    A wider matrix (typically the full ``m x m`` unitary) is truncated to its
    first ``n`` columns, the input modes of the standard one-photon-per-mode input.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] < 1 or u.shape[1] < 1:
        raise InputError(f"interferometer must be a non-empty 2-d matrix, got shape {u.shape}")
    if n is None:
        n = u.shape[1]
    if n < 0 or n > u.shape[1]:
        raise InputError(f"n={n} photons need at least n columns, matrix has {u.shape[1]}")
    if n > MAX_PHOTONS:
        raise InputError(f"n={n} exceeds the subset-mask cap of {MAX_PHOTONS}")
    return np.ascontiguousarray(u[:, :n])


def column_unitarity_error(u):
    """Max deviation of ``u^dagger u`` from the identity."""
    u = np.asarray(u, dtype=np.complex128)
    gram = u.conj().T @ u
    return float(np.max(np.abs(gram - np.eye(u.shape[1]))))

