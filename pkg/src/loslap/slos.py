"""Term-by-term polynomial expansion, full and restricted to a mask.

Expanding ``P = prod_j (sum_i u[i, j] x_i)`` one factor at a time gives the
coefficient ``c_s`` of every monomial ``x^s``; the output amplitude is
``c_s * sqrt(s!)``.  Each generation is a dense coefficient array indexed by the
lexicographic order of that generation's states, and only two generations are
alive at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    InputError,
    as_interferometer,
    check_memory,
    iter_fock_states,
    normalization_factor,
    state_count,
)


@dataclass(frozen=True)
class Mask:
    """Required occupations on a subset of modes."""

    modes: tuple
    occupations: tuple

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(x) for x in self.modes))
        object.__setattr__(self, "occupations", tuple(int(x) for x in self.occupations))
        if len(self.modes) != len(self.occupations):
            raise InputError("mask modes and occupations differ in length")
        if len(set(self.modes)) != len(self.modes):
            raise InputError(f"mask modes must be distinct, got {self.modes}")
        if any(o < 0 for o in self.occupations):
            raise InputError(f"mask occupations must be >= 0, got {self.occupations}")

    @property
    def total(self):
        return sum(self.occupations)

    def matches(self, state):
        return all(state[i] == o for i, o in zip(self.modes, self.occupations))

    def validate(self, m, n):
        if any(not 0 <= i < m for i in self.modes):
            raise InputError(f"mask modes {self.modes} outside [0, {m})")
        if self.total > n:
            raise InputError(f"mask holds {self.total} photons, more than n={n}")
        if len(self.modes) == m and self.total != n:
            raise InputError(f"a mask covering all {m} modes must hold exactly n={n} photons")


def slos_memory_slots(m, n):
    """Peak coefficient count: the last two generations."""
    if n == 0:
        return 1
    return math.comb(m + n - 1, n) + math.comb(m + n - 2, n - 1)


def _child_table(states, next_index, m):
    child = np.empty((len(states), m), dtype=np.int64)
    for r, s in enumerate(states):
        lst = list(s)
        for i in range(m):
            lst[i] += 1
            child[r, i] = next_index[tuple(lst)]
            lst[i] -= 1
    return child


def slos_full(u, n, stats=None, memory_cap=None):
    """All ``C(n+m-1, n)`` amplitudes for input ``1_n``, keyed by output state.

    Keys are in lexicographic order.  Refuses with :class:`BudgetError` before
    allocating when two generations would exceed the memory cap.
    """
    u = as_interferometer(u, n)
    m = u.shape[0]
    check_memory(slos_memory_slots(m, n), f"expansion of n={n}, m={m}", memory_cap)
    if stats is not None:
        stats.coefficient_slots = max(stats.coefficient_slots, slos_memory_slots(m, n))

    states = list(iter_fock_states(m, 0))
    coeffs = np.ones(1, dtype=np.complex128)
    for k in range(n):
        nxt_states = list(iter_fock_states(m, k + 1))
        nxt_index = {s: r for r, s in enumerate(nxt_states)}
        child = _child_table(states, nxt_index, m)
        nxt = np.zeros(len(nxt_states), dtype=np.complex128)
        for i in range(m):
            # each child has at most one parent per mode, so plain fancy add is safe
            nxt[child[:, i]] += coeffs * u[i, k]
        if stats is not None:
            stats.multiply_adds += m * len(states)
        states, coeffs = nxt_states, nxt
    return {s: c * normalization_factor(s) for s, c in zip(states, coeffs)}


def _survives(state, degree, n, mask):
    deficit = 0
    for i, target in zip(mask.modes, mask.occupations):
        if state[i] > target:
            return False
        deficit += target - state[i]
    return deficit <= n - degree


def slos_masked(u, n, mask, stats=None, memory_cap=None):
    """Amplitudes of the output states that agree with ``mask``.

    Intermediate monomials that can no longer reach a matching state (an
    occupation above its target, or too few photons left to fill the deficits)
    are dropped as soon as they appear.
    """
    u = as_interferometer(u, n)
    m = u.shape[0]
    mask.validate(m, n)
    check_memory(slos_memory_slots(m, n), f"masked expansion of n={n}, m={m}", memory_cap)

    states = [(0,) * m]
    coeffs = np.ones(1, dtype=np.complex128)
    peak = 1
    for k in range(n):
        index = {}
        nxt_states = []
        contrib = []
        ops = 0
        for i in range(m):
            w = u[i, k]
            for r, s in enumerate(states):
                lst = list(s)
                lst[i] += 1
                t = tuple(lst)
                if not _survives(t, k + 1, n, mask):
                    continue
                slot = index.get(t)
                if slot is None:
                    slot = index[t] = len(nxt_states)
                    nxt_states.append(t)
                    contrib.append(0j)
                contrib[slot] += coeffs[r] * w
                ops += 1
        if stats is not None:
            stats.multiply_adds += ops
        peak = max(peak, len(states) + len(nxt_states))
        states, coeffs = nxt_states, np.array(contrib, dtype=np.complex128)
    if stats is not None:
        stats.coefficient_slots = max(stats.coefficient_slots, peak)
    out = {s: c * normalization_factor(s) for s, c in zip(states, coeffs)}
    return dict(sorted(out.items()))


def enumerate_masks(modes, n, exact_total=False):
    """Every occupation pattern on ``modes`` holding between 0 and ``n`` photons.

    With ``exact_total`` (the masked modes are all the modes) only patterns
    holding exactly ``n`` photons are produced.
    """
    modes = tuple(modes)
    k = len(modes)
    totals = [n] if exact_total else range(n + 1)
    if k == 0:
        return [Mask((), ())] if (not exact_total or n == 0) else []
    return [Mask(modes, occ) for total in totals for occ in iter_fock_states(k, total)]


def slos_all_masks(u, n, modes, stats=None, memory_cap=None):
    """Union of masked expansions over all masks on ``modes``; equals :func:`slos_full`."""
    u = as_interferometer(u, n)
    m = u.shape[0]
    out = {}
    for mask in enumerate_masks(modes, n, exact_total=len(modes) == m):
        out.update(slos_masked(u, n, mask, stats=stats, memory_cap=memory_cap))
    if len(out) != state_count(m, n):
        raise AssertionError("masks on the chosen modes do not partition the outputs")
    return dict(sorted(out.items()))
