"""Noisy strong simulation read off a single lossless traversal.

A node of degree ``k`` holds, for every set ``J`` of ``n - k`` columns not yet
used, the permanent with columns ``[n] - J``.  That is exactly the amplitude
data of the scenario where the photons of ``J`` were lost, so interior nodes
give uniform loss and distinguishable groups without extra multiply-adds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MAX_ENUMERATED_STATES,
    BudgetError,
    InputError,
    as_interferometer,
    normalization_factor,
)
from .lattice import iter_nodes, iterate_amplitudes


@dataclass(frozen=True)
class LossModel:
    """Each photon is lost independently with probability ``eta``."""

    eta: float

    def __post_init__(self):
        eta = float(self.eta)
        if not 0.0 <= eta <= 1.0 or math.isnan(eta):
            raise InputError(f"eta must lie in [0,1], got {self.eta}")
        object.__setattr__(self, "eta", eta)


def _factorial_product(state):
    out = 1
    for s in state:
        out *= math.factorial(s)
    return out


def iter_lossy(u, n, loss, stats=None, memory_cap=None):
    """Yield ``(state, probability)`` for every state of 0..n photons, vacuum first."""
    if not isinstance(loss, LossModel):
        loss = LossModel(loss)
    u = as_interferometer(u, n)
    m = u.shape[0]
    eta = loss.eta
    weight = [eta ** (n - k) * (1.0 - eta) ** k for k in range(n + 1)]
    yield (0,) * m, weight[0]
    for ev in iter_nodes(u, n, stats=stats, memory_cap=memory_cap):
        coeffs = ev.coefficients
        mass = float(np.sum(coeffs.real ** 2 + coeffs.imag ** 2))
        yield ev.state, weight[ev.level] * mass / _factorial_product(ev.state)


def lossy_distribution(u, n, loss, stats=None, memory_cap=None):
    """Output probabilities under uniform loss, keyed by state (any photon count)."""
    return dict(iter_lossy(u, n, loss, stats=stats, memory_cap=memory_cap))


def normalize_groups(groups, n):
    """Validate a partition of the input columns ``0..n-1`` into groups."""
    groups = [tuple(sorted(int(c) for c in g)) for g in groups]
    seen = [c for g in groups for c in g]
    if any(not g for g in groups):
        raise InputError("distinguishability groups must be non-empty")
    if sorted(seen) != list(range(n)):
        raise InputError(f"groups {groups} must partition the input photons 0..{n - 1}")
    return groups


def parse_groups(text):
    """``"1,2|3"`` (1-based photons) to ``[(0, 1), (2,)]``."""
    try:
        return [tuple(int(c) - 1 for c in part.split(",")) for part in text.split("|")]
    except ValueError:
        raise InputError(f"cannot parse --groups {text!r}; expected e.g. '1,2|3'") from None


def group_distributions(u, n, groups, stats=None, memory_cap=None):
    """Lossless probabilities of each group alone, from one traversal."""
    u = as_interferometer(u, n)
    groups = normalize_groups(groups, n)
    full = (1 << n) - 1
    wanted = {}
    for g_idx, g in enumerate(groups):
        gmask = sum(1 << c for c in g)
        wanted.setdefault(len(g), []).append((g_idx, full ^ gmask))
    out = [{} for _ in groups]
    for ev in iter_nodes(u, n, stats=stats, memory_cap=memory_cap):
        for g_idx, rest in wanted.get(ev.level, ()):
            amp = ev.coefficient(rest)
            out[g_idx][ev.state] = (amp.real ** 2 + amp.imag ** 2) / _factorial_product(ev.state)
    return out


def distinguishable_distribution(u, n, groups, limit=MAX_ENUMERATED_STATES, stats=None,
                                 memory_cap=None):
    """Probabilities when photons in different groups are mutually distinguishable.

    Each group interferes only with itself, so the output is the convolution of
    the per-group distributions.  Refused when the product of the per-group
    output counts exceeds ``limit``.
    """
    u = as_interferometer(u, n)
    m = u.shape[0]
    groups = normalize_groups(groups, n)
    work = 1
    for g in groups:
        work *= math.comb(len(g) + m - 1, len(g))
    if work > limit:
        raise BudgetError(
            f"convolving {len(groups)} groups needs {work} terms, above the limit {limit}",
            required=work,
        )
    dist = {(0,) * m: 1.0}
    for part in group_distributions(u, n, groups, stats=stats, memory_cap=memory_cap):
        nxt = {}
        for a, pa in dist.items():
            for b, pb in part.items():
                key = tuple(x + y for x, y in zip(a, b))
                nxt[key] = nxt.get(key, 0.0) + pa * pb
        dist = nxt
    return dict(sorted(dist.items()))


def doubled_matrix(u, n):
    """Each of the first ``n`` columns repeated twice: input ``|2, 2, ..., 2>``."""
    return np.repeat(as_interferometer(u, n), 2, axis=1)


def multiphoton_distribution(u, n, doubled=True, stats=None, memory_cap=None):
    """Stream ``(state, amplitude)``; with ``doubled`` every source emits two photons."""
    if not doubled:
        yield from iterate_amplitudes(u, n, stats=stats, memory_cap=memory_cap)
        return
    w = doubled_matrix(u, n)
    scale = 1.0 / normalization_factor((2,) * n)
    for state, amp in iterate_amplitudes(w, 2 * n, stats=stats, memory_cap=memory_cap):
        yield state, amp * scale
