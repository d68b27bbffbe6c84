"""FLOP and memory counts for the four strong-simulation strategies, plus budget solvers.

Counts are exact Python integers.  FLOPs count complex multiplications and
complex additions separately, so one multiply-accumulate is two FLOPs.
Memory is measured in complex slots of :data:`COMPLEX_BYTES` bytes.
"""

from __future__ import annotations

import csv
import decimal
import math
from dataclasses import dataclass

from .core import COMPLEX_BYTES, DEFAULT_MEMORY_CAP, InputError, iter_fock_states

METHODS = ("permanent_all", "slos", "slos_mask", "loslap")

#: Above this many modes the mask-size searches bisect instead of scanning.
SCAN_LIMIT = 4096


def _check(n, m):
    if n < 1 or m < 1:
        raise InputError(f"need n >= 1 and m >= 1, got n={n}, m={m}")


def flops_loslap(n, m):
    """Depth-first lattice traversal: ``2n * sum_k C(n-1, k-1) * C(m+k-1, m-1)``."""
    _check(n, m)
    return 2 * n * sum(math.comb(n - 1, k - 1) * math.comb(m + k - 1, m - 1)
                       for k in range(1, n + 1))


def flops_slos(n, m):
    _check(n, m)
    return 2 * n * math.comb(n + m - 1, n)


def flops_permanent_all(n, m):
    """One permanent per output, ignoring the min-occupation saving: ``n * C(2m+n-1, n)``."""
    _check(n, m)
    return n * math.comb(2 * m + n - 1, n)


def permanent_work_sum(n, m):
    """``sum over states of prod(s_j + 1)`` by enumeration (equals ``C(2m+n-1, n)``)."""
    return sum(math.prod(s + 1 for s in state) for state in iter_fock_states(m, n))


def flops_permanent_all_exact(n, m):
    """Per-state cost with the repeated-row saving kept: ``n * prod(s+1) / min_{s>0}(s+1)``."""
    _check(n, m)
    total = 0
    for state in iter_fock_states(m, n):
        prod = math.prod(s + 1 for s in state)
        total += prod // min(s + 1 for s in state if s)
    return n * total


def flops_slos_mask(n, m, k):
    """All outputs by iterating over every mask on ``k`` modes."""
    _check(n, m)
    if not 1 <= k <= m:
        raise InputError(f"mask size k={k} outside [1, m={m}]")
    alpha = 1 if k == m else 0
    total = 0
    for s in range(1, n + 1):
        support = math.comb(m, s)
        if not support:
            break
        for d in range(s, n + 1):
            total += (2 * s * math.comb(n - d + k - alpha, n - d) * support
                      * math.comb(d - 1, d - s))
    return total


def _mask_photon_range(n, m, k):
    return [n] if k == m else range(0, n + 1)


_EXACT_POWER_LIMIT = 4096


def _ceil_power_bound(k, p):
    """``ceil((1 + p/k)**k)``."""
    if k <= _EXACT_POWER_LIMIT:
        return -(-((k + p) ** k) // (k ** k))
    # huge k: the value is below e**p and never an integer (k does not divide p),
    # so a 60-digit decimal power locates the ceiling
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        value = (decimal.Decimal(k + p) / decimal.Decimal(k)) ** k
    return int(value.to_integral_value(rounding=decimal.ROUND_CEILING))


def mem_slos_mask(n, m, k):
    """Peak states for one masked call, with the submask count bounded by ``(1 + p/k)^k``."""
    _check(n, m)
    if not 1 <= k <= m:
        raise InputError(f"mask size k={k} outside [1, m={m}]")
    best = 0
    for p in _mask_photon_range(n, m, k):
        best = max(best, _ceil_power_bound(k, p) * math.comb(m - k + n - p, n - p))
    return best


def _max_submasks(k, p):
    # product of (m_i + 1) is largest for the most balanced split of p over k modes
    q, r = divmod(p, k)
    return (q + 2) ** r * (q + 1) ** (k - r)


def mem_slos_mask_exact(n, m, k):
    """As :func:`mem_slos_mask` with the true maximum number of submasks."""
    _check(n, m)
    if not 1 <= k <= m:
        raise InputError(f"mask size k={k} outside [1, m={m}]")
    return max(_max_submasks(k, p) * math.comb(m - k + n - p, n - p)
               for p in _mask_photon_range(n, m, k))


def memory_slots(method, n, m, k=None):
    """Working complex slots (matrix storage only for the permanent method)."""
    _check(n, m)
    if method == "loslap":
        return 1 << n
    if method == "slos":
        return math.comb(m + n - 1, n) + math.comb(m + n - 2, n - 1)
    if method == "slos_mask":
        return mem_slos_mask(n, m, k)
    if method == "permanent_all":
        return m * m
    raise InputError(f"unknown method {method!r}; choose from {METHODS}")


def flops(method, n, m, k=None):
    if method == "loslap":
        return flops_loslap(n, m)
    if method == "slos":
        return flops_slos(n, m)
    if method == "slos_mask":
        return flops_slos_mask(n, m, k)
    if method == "permanent_all":
        return flops_permanent_all(n, m)
    raise InputError(f"unknown method {method!r}; choose from {METHODS}")


@dataclass(frozen=True)
class CostReport:
    method: str
    n: int
    m: int
    flops: int
    memory_complex_slots: int
    matrix_slots: int
    mask_size: int | None = None

    @property
    def total_slots(self):
        if self.method == "permanent_all":
            return self.memory_complex_slots
        return self.memory_complex_slots + self.matrix_slots

    @property
    def memory_bytes(self):
        return self.memory_complex_slots * COMPLEX_BYTES


def cost_report(method, n, m, k=None):
    return CostReport(method, n, m, flops(method, n, m, k), memory_slots(method, n, m, k),
                      m * m, k)


@dataclass(frozen=True)
class Budget:
    """A machine: memory, throughput and wall-clock allowance."""

    memory_bytes: int = DEFAULT_MEMORY_CAP
    flops_per_second: float = 1e9
    wall_seconds: float = 86400.0
    slot_bytes: int = COMPLEX_BYTES

    def __post_init__(self):
        for name in ("memory_bytes", "flops_per_second", "wall_seconds", "slot_bytes"):
            if not getattr(self, name) > 0:
                raise InputError(f"budget field {name} must be positive")

    @property
    def max_flops(self):
        return int(self.flops_per_second * self.wall_seconds)

    @property
    def max_slots(self):
        return self.memory_bytes // self.slot_bytes


def _first_true(pred, lo, hi):
    """Smallest ``k`` in ``[lo, hi]`` with ``pred(k)``, assuming monotonicity; ``None`` if none."""
    if hi - lo < SCAN_LIMIT:
        return next((k for k in range(lo, hi + 1) if pred(k)), None)
    if not pred(hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def crossover_mask_size(n, m):
    """Smallest mask size whose cost reaches the traversal's; ``None`` if none does."""
    target = flops_loslap(n, m)
    return _first_true(lambda k: flops_slos_mask(n, m, k) >= target, 1, m)


def min_mask_for_memory(n, m, memory_bytes=DEFAULT_MEMORY_CAP, slot_bytes=COMPLEX_BYTES):
    """Smallest mask size fitting in memory; ``None`` when infeasible."""
    slots = memory_bytes // slot_bytes
    fits = lambda k: mem_slos_mask(n, m, k) <= slots  # noqa: E731
    # non-increasing on 1..m-1; k = m only admits full-photon masks and can rise again
    k = _first_true(fits, 1, m - 1) if m > 1 else None
    if k is None and fits(m):
        k = m
    return k


def best_mask(n, m, memory_bytes=DEFAULT_MEMORY_CAP, slot_bytes=COMPLEX_BYTES):
    """Fastest mask size that fits in memory.

    Mask cost never decreases with ``k``, so this is the smallest fitting size
    (ties therefore resolve to the smaller mask).
    """
    return min_mask_for_memory(n, m, memory_bytes, slot_bytes)


def _feasible(method, n, m, budget):
    if method == "slos_mask":
        k = best_mask(n, m, budget.memory_bytes, budget.slot_bytes)
        return k is not None and flops_slos_mask(n, m, k) <= budget.max_flops
    return (memory_slots(method, n, m) <= budget.max_slots
            and flops(method, n, m) <= budget.max_flops)


def max_modes_within_budget(method, n, budget=None, limit=2**62):
    """Largest ``m`` for which ``method`` fits the budget; 0 when ``m = 1`` does not.

    Costs grow with ``m``, so the search doubles ``m`` until it fails and then bisects.
    """
    budget = budget or Budget()
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; choose from {METHODS}")
    if not _feasible(method, n, 1, budget):
        return 0
    lo, hi = 1, 2
    while hi <= limit and _feasible(method, n, hi, budget):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _feasible(method, n, mid, budget):
            lo = mid
        else:
            hi = mid
    return lo


def max_photons_within_memory(memory_bytes=DEFAULT_MEMORY_CAP, slot_bytes=COMPLEX_BYTES):
    """Largest ``n`` whose ``2**n`` coefficient vector fits; independent of ``m``."""
    slots = memory_bytes // slot_bytes
    return slots.bit_length() - 1 if slots else -1


def winner(n, m, measurements, memory_bytes=None):
    """``"loslap"`` or ``"slos_mask"`` for ``measurements`` adaptive modes.

    With a memory limit the mask grows to the smallest size that fits.  Ties
    go to the traversal.  Returns ``"loslap"`` when no mask fits at all.
    """
    k = measurements
    if memory_bytes is not None:
        floor = min_mask_for_memory(n, m, memory_bytes)
        if floor is None:
            return "loslap"
        k = max(k, floor)
    return "slos_mask" if flops_slos_mask(n, m, k) < flops_loslap(n, m) else "loslap"


def region_rows(n, modes, memory_bytes=None):
    """``(m, k, mask_size, winner)`` over every ``k in 1..m`` for each ``m``."""
    rows = []
    for m in modes:
        floor = None if memory_bytes is None else min_mask_for_memory(n, m, memory_bytes)
        for k in range(1, m + 1):
            size = k if floor is None else max(k, floor)
            rows.append((m, k, size, winner(n, m, k, memory_bytes)))
    return rows


def dominance(n, m, memory_bytes=DEFAULT_MEMORY_CAP):
    """True when the memory floor on the mask already exceeds the crossover size."""
    floor = min_mask_for_memory(n, m, memory_bytes)
    cross = crossover_mask_size(n, m)
    if floor is None:
        return True
    return cross is not None and floor > cross


def frontier_rows(photons, budget=None):
    budget = budget or Budget()
    return [(n, *[max_modes_within_budget(meth, n, budget) for meth in METHODS])
            for n in photons]


def table_rows(n, m):
    rows = []
    for meth in ("permanent_all", "slos", "loslap"):
        rep = cost_report(meth, n, m)
        rows.append((meth, "", rep.flops, rep.memory_complex_slots))
    for k in range(1, m + 1):
        rep = cost_report("slos_mask", n, m, k)
        rows.append(("slos_mask", k, rep.flops, rep.memory_complex_slots))
    return rows


def write_csv(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


FRONTIER_HEADER = ("n", *(f"m_max_{meth}" for meth in METHODS))
REGION_HEADER = ("m", "k", "mask_size", "winner")
TABLE_HEADER = ("method", "k", "flops", "memory_complex_slots")
