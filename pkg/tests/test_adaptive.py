import numpy as np
import pytest

from loslap.adaptive import (
    AdaptivePolicy,
    PolicyLookupError,
    adaptive_distribution,
    brute_force_adaptive,
    load_policy,
    save_policy,
    update_U,
)
from loslap.core import InputError, haar_random_unitary
from loslap.lattice import distribution
from loslap.slos import slos_full
from oracles import brute_amplitudes


def random_policy(k, m, n, seed):
    probe = AdaptivePolicy(k, m, default=np.eye(m))
    rng = np.random.default_rng(seed)
    return AdaptivePolicy(k, m, {p: haar_random_unitary(m - k, int(rng.integers(1 << 30)))
                                 for p in probe.outcomes(n)})


def test_update_identity_and_permutation():
    base = haar_random_unitary(4, 0)
    pol = AdaptivePolicy.constant(1, 4)
    assert np.array_equal(update_U((1,), base, pol), base)
    perm = np.eye(3)[[1, 0, 2]]
    pol = AdaptivePolicy(1, 4, {(1,): perm})
    out = update_U((1,), base, pol)
    assert np.array_equal(out[0], base[0])
    assert np.array_equal(out[1:], base[[2, 1, 3]])


def test_update_preserves_unitarity():
    base = haar_random_unitary(6, 1)
    pol = AdaptivePolicy(2, 6, {(0, 1): haar_random_unitary(4, 2)})
    out = update_U((0, 1), base, pol)
    assert np.max(np.abs(out.conj().T @ out - np.eye(6))) < 1e-12


def test_policy_validation():
    bad = np.eye(3)
    bad[0, 1] = 0.5
    with pytest.raises(InputError, match="measured"):
        AdaptivePolicy(1, 3, {(0,): bad})
    with pytest.raises(InputError):
        AdaptivePolicy(1, 3, {(0,): np.eye(4)})
    with pytest.raises(PolicyLookupError, match="1"):
        AdaptivePolicy(1, 3).unitary((1,))


def test_swap_example_matches_brute_force():
    # k=1, m=3, n=2: swap modes 2 and 3 when mode 1 holds one photon
    swap = np.array([[0, 1], [1, 0]])
    pol = AdaptivePolicy(1, 3, {(1,): swap}, default=np.eye(3))
    u = haar_random_unitary(3, 4)
    got = adaptive_distribution(pol, u, 2)
    ref = brute_force_adaptive(pol, u, 2)
    for p in ref:
        for s in ref[p]:
            assert abs(got[p][s] - ref[p][s]) < 1e-12
    plain = distribution(u, 2)
    assert abs(got[(1,)][(1, 0, 1)] - plain[(1, 1, 0)]) < 1e-12


@pytest.mark.parametrize("n,m,k", [(2, 3, 1), (3, 4, 2), (3, 4, 1), (4, 5, 2)])
def test_engines_agree_and_normalise(n, m, k):
    pol = random_policy(k, m, n, seed=n + m + k)
    u = haar_random_unitary(m, 5)
    got = adaptive_distribution(pol, u, n)
    ref = brute_force_adaptive(pol, u, n)
    total = 0.0
    for p in ref:
        assert set(got[p]) == set(ref[p])
        for s in ref[p]:
            assert abs(got[p][s] - ref[p][s]) < 1e-12
            total += abs(got[p][s]) ** 2
    assert total == pytest.approx(1.0, abs=1e-10)


def test_outcome_marginals_match_pre_measurement_state():
    n, m, k = 3, 4, 2
    pol = random_policy(k, m, n, seed=1)
    u = haar_random_unitary(m, 6)
    before = brute_amplitudes(u, range(n))
    got = adaptive_distribution(pol, u, n)
    for p, amps in got.items():
        marginal = sum(abs(a) ** 2 for s, a in before.items() if s[:k] == p)
        assert sum(abs(a) ** 2 for a in amps.values()) == pytest.approx(marginal, abs=1e-12)


def test_locality_under_mutation():
    n, m, k = 3, 4, 1
    pol = random_policy(k, m, n, seed=2)
    u = haar_random_unitary(m, 7)
    before = adaptive_distribution(pol, u, n)
    pol.table[(2,)] = pol._embed(haar_random_unitary(3, 99), "mutant")
    after = adaptive_distribution(pol, u, n)
    for p in before:
        if p != (2,):
            assert before[p] == after[p]
    assert before[(2,)] != after[(2,)]


def test_all_modes_measured_is_plain_simulation():
    u = haar_random_unitary(3, 8)
    pol = AdaptivePolicy.constant(3, 3)
    got = adaptive_distribution(pol, u, 2)
    flat = {s: a for part in got.values() for s, a in part.items()}
    ref = slos_full(u, 2)
    assert max(abs(flat[s] - ref[s]) for s in ref) < 1e-12


def test_identity_policy_brute_force_union_is_full_expansion():
    u = haar_random_unitary(4, 9)
    res = brute_force_adaptive(AdaptivePolicy.constant(2, 4), u, 3)
    flat = {s: a for part in res.values() for s, a in part.items()}
    ref = slos_full(u, 3)
    assert sorted(flat) == sorted(ref)
    assert max(abs(flat[s] - ref[s]) for s in ref) < 1e-12


def test_policy_file_round_trip(tmp_path):
    pol = random_policy(1, 3, 2, seed=3)
    save_policy(pol, tmp_path / "pol.json")
    again = load_policy(tmp_path / "pol.json", 3)
    assert again.k == 1
    for p in pol.table:
        assert np.array_equal(again.unitary(p), pol.unitary(p))
    (tmp_path / "bad.json").write_text('{"k": 1}')
    with pytest.raises(InputError, match="entries"):
        load_policy(tmp_path / "bad.json", 3)
