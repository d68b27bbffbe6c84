"""Feedforward: the interferometer downstream of a measurement depends on its outcome.

Modes ``0..k-1`` are measured.  Because the traversal stack is non-decreasing,
the occupation of the measured modes is final as soon as the first mode
``>= k`` is pushed; from there on the subtree uses the matrix selected by that
outcome.  Rows of measured modes were already consumed by the ancestors and
are never altered, so their coefficients stay valid.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import (
    InputError,
    SimulationError,
    as_interferometer,
    iter_fock_states,
    normalization_factor,
)
from .formats import matrix_from_dict, matrix_to_dict, parse_state, format_state
from .lattice import traverse
from .slos import Mask, slos_masked

_BLOCK_TOL = 1e-12


class PolicyLookupError(SimulationError, LookupError):
    """No replacement unitary for a measurement outcome."""


class AdaptivePolicy:
    """Map from outcomes on the first ``k`` modes to ``m x m`` replacement unitaries.

    Entries may be given as full ``m x m`` matrices (identity on the measured
    block) or as ``(m-k) x (m-k)`` blocks acting on the unmeasured modes.
    ``default``, when set, answers every outcome absent from ``table``.
    """

    def __init__(self, k, m, table=None, default=None):
        if not 0 <= k <= m:
            raise InputError(f"measured mode count k={k} outside [0, m={m}]")
        self.k = int(k)
        self.m = int(m)
        self.table = {}
        for outcome, mat in (table or {}).items():
            self.table[self._check_outcome(outcome)] = self._embed(mat, outcome)
        self.default = None if default is None else self._embed(default, "default")

    @classmethod
    def constant(cls, k, m, unitary=None):
        """Every outcome maps to ``unitary`` (identity when omitted)."""
        eye = np.eye(m, dtype=np.complex128)
        return cls(k, m, default=eye if unitary is None else unitary)

    def _check_outcome(self, outcome):
        outcome = tuple(int(x) for x in outcome)
        if len(outcome) != self.k or any(x < 0 for x in outcome):
            raise InputError(f"outcome {outcome} must list {self.k} non-negative occupations")
        return outcome

    def _embed(self, mat, label):
        mat = np.asarray(mat, dtype=np.complex128)
        k, m = self.k, self.m
        if mat.shape == (m - k, m - k):
            full = np.eye(m, dtype=np.complex128)
            full[k:, k:] = mat
            return full
        if mat.shape != (m, m):
            raise InputError(
                f"policy entry {label}: shape {mat.shape}, expected {(m, m)} or {(m - k, m - k)}"
            )
        off = max(
            np.max(np.abs(mat[:k, :k] - np.eye(k)), initial=0.0),
            np.max(np.abs(mat[:k, k:]), initial=0.0),
            np.max(np.abs(mat[k:, :k]), initial=0.0),
        )
        if off > _BLOCK_TOL:
            raise InputError(
                f"policy entry {label}: differs from identity on measured modes by {off:.3g}"
            )
        return mat

    def unitary(self, outcome):
        outcome = tuple(outcome)
        mat = self.table.get(outcome, self.default)
        if mat is None:
            raise PolicyLookupError(f"policy has no entry for outcome {format_state(outcome)}")
        return mat

    def outcomes(self, n):
        """Every outcome a run with ``n`` photons can produce on the measured modes."""
        if self.k == 0:
            return [()]
        totals = [n] if self.k == self.m else range(n + 1)
        return [p for r in totals for p in iter_fock_states(self.k, r)]

    def check_total(self, n):
        for p in self.outcomes(n):
            self.unitary(p)

    def to_dict(self):
        return {
            "k": self.k,
            "m": self.m,
            "entries": [{"outcome": format_state(p), "unitary": matrix_to_dict(mat)}
                        for p, mat in sorted(self.table.items())],
        }


def load_policy(path, m):
    """Read ``{"k": int, "entries": [{"outcome": "1,0", "unitary": matrix}]}``."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(obj, dict) or "k" not in obj or "entries" not in obj:
        raise InputError(f"{path}: policy needs fields 'k' and 'entries'")
    table = {}
    for i, entry in enumerate(obj["entries"]):
        where = f"{path}: entries[{i}]"
        if "outcome" not in entry or "unitary" not in entry:
            raise InputError(f"{where}: needs fields 'outcome' and 'unitary'")
        table[parse_state(entry["outcome"])] = matrix_from_dict(entry["unitary"], where)
    return AdaptivePolicy(int(obj["k"]), m, table)


def save_policy(policy, path):
    Path(path).write_text(json.dumps(policy.to_dict()))


def update_U(outcome, base, policy):
    """``base`` with unmeasured rows replaced by those of ``V_outcome @ base``."""
    base = np.asarray(base, dtype=np.complex128)
    if base.shape[0] != policy.m:
        raise InputError(f"matrix has {base.shape[0]} rows, policy expects m={policy.m}")
    v = policy.unitary(outcome)
    k = policy.k
    if np.array_equal(v, np.eye(policy.m)):
        return base
    out = base.copy()
    out[k:] = v[k:, k:] @ base[k:]
    return out


def _outcome_of(stack, k):
    occ = [0] * k
    for mode in stack:
        if mode < k:
            occ[mode] += 1
    return tuple(occ)


def traverse_adaptive(policy, base, n, visitor, stats=None, memory_cap=None):
    """Depth-first traversal with the downstream matrix chosen per measured outcome."""
    u = as_interferometer(base, n)
    if u.shape[0] != policy.m:
        raise InputError(f"matrix has {u.shape[0]} rows, policy expects m={policy.m}")
    k = policy.k

    def on_push(stack, parent):
        # the measured prefix becomes final when the first unmeasured mode enters
        if stack[-1] >= k and (len(stack) == 1 or stack[-2] < k):
            return np.ascontiguousarray(update_U(_outcome_of(stack, k), u, policy))
        return parent

    traverse(u, n, visitor, stats=stats, on_push=on_push, memory_cap=memory_cap)


def adaptive_distribution(policy, base, n, stats=None):
    """``outcome -> {state: amplitude}`` from one adaptive traversal."""
    out = {p: {} for p in policy.outcomes(n)}

    def grab(ev):
        if ev.is_leaf:
            p = ev.state[:policy.k]
            out.setdefault(p, {})[ev.state] = ev.leaf_value / normalization_factor(ev.state)

    traverse_adaptive(policy, base, n, grab, stats=stats)
    return out


def brute_force_adaptive(policy, base, n):
    """Per outcome, a masked expansion with that outcome's fixed matrix."""
    u = as_interferometer(base, n)
    k = policy.k
    out = {}
    for p in policy.outcomes(n):
        fixed = update_U(p, u, policy)
        out[p] = slos_masked(fixed, n, Mask(tuple(range(k)), p))
    return out
