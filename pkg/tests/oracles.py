"""Brute-force references, deliberately independent of the package's engines."""

import itertools
import math

import numpy as np


def brute_permanent(a):
    a = np.asarray(a)
    k = a.shape[0]
    total = 0j
    for perm in itertools.permutations(range(k)):
        prod = 1 + 0j
        for i, j in enumerate(perm):
            prod *= a[i, j]
        total += prod
    return total


def output_states(m, n):
    """All ``n``-photon states on ``m`` modes via multisets of modes."""
    out = []
    for combo in itertools.combinations_with_replacement(range(m), n):
        state = [0] * m
        for mode in combo:
            state[mode] += 1
        out.append(tuple(state))
    return out


def rows_of(state):
    return [i for i, s in enumerate(state) for _ in range(s)]


def brute_amplitudes(u, cols):
    """Amplitudes for single photons entering the columns ``cols`` of ``u``."""
    u = np.asarray(u, dtype=complex)
    m, n = u.shape[0], len(cols)
    out = {}
    for s in output_states(m, n):
        sub = u[np.ix_(rows_of(s), list(cols))]
        norm = math.sqrt(math.prod(math.factorial(x) for x in s))
        out[s] = brute_permanent(sub) / norm if n else 1 + 0j
    return out


def lossy_oracle(u, n, eta):
    """Sum over every surviving photon subset of its lossless distribution."""
    m = u.shape[0]
    dist = {}
    for k in range(n + 1):
        weight = eta ** (n - k) * (1 - eta) ** k
        for cols in itertools.combinations(range(n), k):
            if k == 0:
                amps = {(0,) * m: 1 + 0j}
            else:
                amps = brute_amplitudes(u, cols)
            for s, a in amps.items():
                dist[s] = dist.get(s, 0.0) + weight * abs(a) ** 2
    return dist


def classical_oracle(u, n):
    """Fully distinguishable photons: sum over photon-to-mode assignments."""
    u = np.asarray(u)
    m = u.shape[0]
    dist = {}
    for assign in itertools.product(range(m), repeat=n):
        p = 1.0
        for photon, mode in enumerate(assign):
            p *= abs(u[mode, photon]) ** 2
        state = [0] * m
        for mode in assign:
            state[mode] += 1
        state = tuple(state)
        dist[state] = dist.get(state, 0.0) + p
    return dist
