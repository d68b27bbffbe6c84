import math
from collections import Counter

import pytest

from loslap.core import BudgetError, OpCounter, enumerate_fock_states, haar_random_unitary
from loslap.lattice import distribution, traverse
from loslap.steiner import (
    PlanError,
    build_partition_graph,
    class_size,
    execute_plan,
    export_stp,
    full_plan,
    import_solution,
    load_plan,
    make_plan,
    partition_count,
    partitions,
    plan_amplitudes,
    read_stp,
    reweight_plan,
    save_plan,
    solve,
    solve_exact,
    solve_greedy,
    write_solution,
)


def test_partitions_and_counts():
    assert partitions(4) == [(1, 1, 1, 1), (2, 1, 1), (2, 2), (3, 1), (4,)]
    assert [partition_count(k) for k in range(10)] == [len(partitions(k)) for k in range(10)]
    assert sum(partition_count(k) for k in range(41)) == 215308


def test_class_size_examples():
    assert class_size((3,), 3) == 3
    assert class_size((1, 1), 3) == 3
    assert class_size((1, 1, 1, 1), 3) == 0
    for m in range(1, 9):
        for k in range(0, 7):
            assert sum(class_size(lam, m) for lam in partitions(k)) == math.comb(m + k - 1, k)


def test_graph_structure():
    g = build_partition_graph(5, 5)
    assert len(g.nodes) == 19
    assert len(g.terminals) == 7
    assert g.original_node_count() == math.comb(10, 5)
    for lam, mu in g.arcs:
        assert sum(mu) == sum(lam) + 1
        assert g.arc_weight(lam, mu) == 2 * 5 * math.comb(4, sum(lam)) * class_size(mu, 5)
    # too few modes for four parts: those classes vanish
    small = build_partition_graph(4, 2)
    assert all(len(lam) <= 2 for lam in small.nodes)


def test_exact_values():
    for n in (2, 3, 4):
        g = build_partition_graph(n, n)
        assert solve_exact(g).total_weight == g.full_weight()
    g = build_partition_graph(5, 5)
    plan = solve_exact(g)
    assert plan.total_weight == 5210
    assert set(g.nodes) - plan.classes == {(2, 2), (2, 1)}


def test_greedy_brackets():
    for n in range(2, 8):
        g = build_partition_graph(n, n)
        exact = solve_exact(g).total_weight
        greedy = solve_greedy(g).total_weight
        assert exact <= greedy <= g.full_weight()


def brute_optimum(g):
    """Minimum over every subset of non-terminal classes that still reaches all terminals."""
    inner = [lam for lam in g.nodes if lam != () and sum(lam) < g.n]
    best = None
    for bits in range(1 << len(inner)):
        keep = {()} | set(g.terminals) | {lam for i, lam in enumerate(inner) if bits >> i & 1}
        if all(any(p in keep for p in g.pred[mu]) for mu in keep if mu != ()):
            w = sum(g.weights[mu] for mu in keep)
            best = w if best is None else min(best, w)
    return best


@pytest.mark.parametrize("n,m", [(4, 4), (5, 5), (5, 3), (6, 6), (6, 9)])
def test_exact_matches_brute_force(n, m):
    g = build_partition_graph(n, m)
    assert solve_exact(g).total_weight == brute_optimum(g)


def test_exact_refuses_large_and_solve_falls_back():
    g = build_partition_graph(10, 10)
    with pytest.raises(BudgetError):
        solve_exact(g)
    plan = solve(g)
    assert plan.total_weight <= g.full_weight()


@pytest.mark.parametrize("n,m", [(3, 3), (4, 6), (5, 5), (6, 6)])
def test_execute_plan_matches_traversal(backend, n, m):
    g = build_partition_graph(n, m)
    plan = solve_exact(g)
    u = haar_random_unitary(m, n)
    st = OpCounter()
    states = []
    execute_plan(u, n, plan, lambda ev: states.append(ev.state), stats=st)
    assert st.flops == plan.total_weight
    assert len(states) == len(set(states))
    leaves = Counter(s for s in states if sum(s) == n)
    assert sorted(leaves) == enumerate_fock_states(m, n)
    assert set(leaves.values()) == {1}
    got = plan_amplitudes(u, n, plan)
    ref = distribution(u, n)
    assert max(abs(got[s] - ref[s]) for s in ref) < 1e-12


def test_full_plan_is_byte_identical():
    u = haar_random_unitary(5, 1)
    g = build_partition_graph(4, 5)
    a, b = [], []
    execute_plan(u, 4, full_plan(g), lambda ev: a.append((ev.state, ev.coefficients.tobytes())))
    traverse(u, 4, lambda ev: b.append((ev.state, ev.coefficients.tobytes())))
    assert a == b


def test_dead_end_skipping_on_three_modes():
    g = build_partition_graph(3, 3)
    parent = {(1,): (), (2,): (1,), (1, 1): (1,), (3,): (2,), (2, 1): (2,), (1, 1, 1): (1, 1)}
    plan = make_plan(g, parent)
    seen = []
    execute_plan(haar_random_unitary(3, 0), 3, plan, lambda ev: seen.append(ev.state),
                 skip_dead_ends=True)
    assert [s for s in seen if sorted(s) == [0, 1, 1]] == [(1, 1, 0)]
    assert sorted(s for s in seen if sum(s) == 3) == enumerate_fock_states(3, 3)


def test_stp_and_solution_round_trip(tmp_path):
    g = build_partition_graph(5, 5)
    export_stp(g, tmp_path / "g.stp")
    parsed = read_stp(tmp_path / "g.stp")
    assert parsed["nodes"] == 19
    assert len(parsed["arcs"]) == len(g.arcs)
    assert len(parsed["terminals"]) == 7
    assert parsed["root"] == g.index[()] + 1
    plan = solve_exact(g)
    write_solution(g, plan, tmp_path / "sol.txt")
    again = import_solution(g, tmp_path / "sol.txt")
    assert again.total_weight == plan.total_weight
    assert again.parent == plan.parent


def test_import_reports_missing_terminal(tmp_path):
    g = build_partition_graph(3, 3)
    plan = solve_exact(g)
    lines = [f"E {g.index[lam] + 1} {g.index[mu] + 1}"
             for mu, lam in plan.parent.items() if mu != (3,)]
    (tmp_path / "sol.txt").write_text("\n".join(lines))
    with pytest.raises(PlanError, match=r"\(3\)"):
        import_solution(g, tmp_path / "sol.txt")


def test_import_rejects_non_arcs(tmp_path):
    g = build_partition_graph(3, 3)
    (tmp_path / "sol.txt").write_text(f"E {g.index[()] + 1} {g.index[(3,)] + 1}\n")
    with pytest.raises(PlanError, match="not an arc"):
        import_solution(g, tmp_path / "sol.txt")


def test_plan_cache_and_reweight(tmp_path):
    g = build_partition_graph(5, 5)
    plan = solve_exact(g)
    save_plan(plan, tmp_path / "p.json")
    assert load_plan(tmp_path / "p.json").total_weight == 5210
    wider = reweight_plan(plan, 10)
    # the m=n plan stays valid for more modes, but need not be optimal there
    assert wider.total_weight >= solve_exact(build_partition_graph(5, 10)).total_weight
    u = haar_random_unitary(10, 3)
    got = plan_amplitudes(u, 5, wider)
    ref = distribution(u, 5)
    assert max(abs(got[s] - ref[s]) for s in ref) < 1e-12
