"""Traversal plans on the partition lattice.

Monomials equal up to renaming variables share a computational cost, so the
lattice collapses to a graph whose level-``k`` nodes are the partitions of
``k``.  An edge ``lam -> mu`` increments one part of ``lam`` (or appends a part
1) and weighs the FLOPs of computing every monomial in the class of ``mu``:
``2n * C(n-1, k-1) * class_size(mu, m)`` at level ``k``.  A traversal plan is a
Steiner arborescence rooted at the empty partition that reaches every
partition of ``n``.  Because a weight depends only on the edge head, a plan's
weight is the sum of its non-root node weights.

Partitions are tuples sorted non-increasingly; ``()`` is the root.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .core import BudgetError, InputError, as_interferometer
from .lattice import NodeEvent, allocate_coefficients, traverse


def partitions(k):
    """Partitions of ``k`` as non-increasing tuples, lexicographically ascending."""
    out = []

    def rec(left, cap, prefix):
        if left == 0:
            out.append(tuple(prefix))
            return
        for part in range(min(left, cap), 0, -1):
            prefix.append(part)
            rec(left - part, part, prefix)
            prefix.pop()

    rec(k, k, [])
    return sorted(out)


def partition_count(k):
    """``p(k)`` by Euler's pentagonal-number recurrence."""
    p = [1] + [0] * k
    for i in range(1, k + 1):
        total = 0
        j = 1
        while True:
            g1 = j * (3 * j - 1) // 2
            if g1 > i:
                break
            sign = 1 if j % 2 else -1
            total += sign * p[i - g1]
            g2 = j * (3 * j + 1) // 2
            if g2 <= i:
                total += sign * p[i - g2]
            j += 1
        p[i] = total
    return p[k]


def class_size(lam, m):
    """Number of monomials over ``m`` variables whose exponent multiset is ``lam``."""
    parts = len(lam)
    if parts > m:
        return 0
    denom = 1
    for value in set(lam):
        denom *= math.factorial(lam.count(value))
    return math.factorial(m) // (math.factorial(m - parts) * denom)


def node_flops(n, level):
    """FLOPs to compute one lattice node at ``level`` from its parent."""
    if level == 0:
        return 0
    return 2 * n * math.comb(n - 1, level - 1)


def format_partition(lam):
    return ",".join(str(p) for p in lam)


def parse_partition(text):
    text = text.strip()
    if not text:
        return ()
    try:
        lam = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise InputError(f"cannot parse partition {text!r}") from None
    if any(p <= 0 for p in lam) or list(lam) != sorted(lam, reverse=True):
        raise InputError(f"partition {text!r} must be positive and non-increasing")
    return lam


def _children_of(lam):
    """``(mu, i)`` pairs: ``mu`` increments a part equal to ``i`` (``i = 0`` appends a 1)."""
    out = []
    seen = set()
    for pos, value in enumerate(lam):
        if value in seen:
            continue
        seen.add(value)
        mu = lam[:pos] + (value + 1,) + lam[pos + 1:]
        out.append((mu, value))
    out.append((lam + (1,), 0))
    return out


@dataclass
class PartitionGraph:
    n: int
    m: int
    nodes: list
    index: dict
    succ: dict
    pred: dict
    weights: dict

    @property
    def root(self):
        return ()

    @property
    def terminals(self):
        return [lam for lam in self.nodes if sum(lam) == self.n]

    def level(self, k):
        return [lam for lam in self.nodes if sum(lam) == k]

    @property
    def arcs(self):
        return [(lam, mu) for lam in self.nodes for mu, _ in self.succ[lam]]

    def arc_weight(self, lam, mu):
        return self.weights[mu]

    def full_weight(self):
        return sum(self.weights.values())

    def original_node_count(self):
        return sum(class_size(lam, self.m) for lam in self.nodes)


def build_partition_graph(n, m):
    """Reduced lattice for ``n`` photons over ``m`` modes.

    Partitions with more than ``m`` parts have no monomials and are left out.
    """
    if n < 1 or m < 1:
        raise InputError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    nodes = [lam for k in range(n + 1) for lam in partitions(k) if len(lam) <= m]
    index = {lam: i for i, lam in enumerate(nodes)}
    succ = {lam: [] for lam in nodes}
    pred = {lam: [] for lam in nodes}
    for lam in nodes:
        if sum(lam) == n:
            continue
        for mu, i in _children_of(lam):
            if mu in index:
                succ[lam].append((mu, i))
                pred[mu].append(lam)
    for lam in nodes:
        succ[lam].sort()
        pred[lam].sort()
    weights = {lam: node_flops(n, sum(lam)) * class_size(lam, m) for lam in nodes}
    return PartitionGraph(n, m, nodes, index, succ, pred, weights)


@dataclass
class TraversalPlan:
    """Arborescence over partition classes.

    ``canonical_dfs`` marks the plan returned by :func:`full_plan`; executing it
    runs the plain depth-first traversal rather than the class-driven walk.
    """

    n: int
    m: int
    parent: dict
    total_weight: int
    canonical_dfs: bool = False
    _children: dict = field(default=None, repr=False, compare=False)

    @property
    def classes(self):
        return {()} | set(self.parent)

    def children(self):
        """``lam -> [(mu, i), ...]`` in ascending order of ``mu``."""
        if self._children is None:
            kids = {lam: [] for lam in self.classes}
            for mu, lam in self.parent.items():
                i = _increment_value(lam, mu)
                kids[lam].append((mu, i))
            for lam in kids:
                kids[lam].sort()
            self._children = kids
        return self._children

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "parent_map": {format_partition(mu): format_partition(lam)
                           for mu, lam in sorted(self.parent.items())},
            "total_weight": self.total_weight,
        }


def _increment_value(lam, mu):
    for child, i in _children_of(lam):
        if child == mu:
            return i
    raise InputError(f"({format_partition(mu)}) is not a child of ({format_partition(lam)})")


class PlanError(InputError):
    pass


def check_plan(g, parent):
    """Validate a parent map against ``g``; return its total weight."""
    for mu, lam in parent.items():
        if mu not in g.index:
            raise PlanError(f"partition ({format_partition(mu)}) is not a node of the graph")
        if lam not in g.pred[mu]:
            raise PlanError(f"({format_partition(lam)}) -> ({format_partition(mu)}) is not an arc")
    for mu in parent:
        node, steps = mu, 0
        while node != ():
            if node not in parent:
                raise PlanError(
                    f"partition ({format_partition(mu)}) is not connected to the root; "
                    f"({format_partition(node)}) has no parent"
                )
            node = parent[node]
            steps += 1
            if steps > g.n:
                raise PlanError("parent map contains a cycle")
    for t in g.terminals:
        if t not in parent:
            raise PlanError(f"plan misses terminal partition ({format_partition(t)})")
    return sum(g.weights[mu] for mu in parent)


def make_plan(g, parent, canonical_dfs=False):
    weight = check_plan(g, parent)
    return TraversalPlan(g.n, g.m, dict(parent), weight, canonical_dfs)


def _parents_from_sets(g, chosen):
    parent = {}
    for mu in g.nodes:
        if mu == () or mu not in chosen:
            continue
        parent[mu] = next(lam for lam in g.pred[mu] if lam in chosen)
    return parent


def full_plan(g):
    """Every class kept; executes as the plain depth-first traversal."""
    return make_plan(g, _parents_from_sets(g, set(g.nodes)), canonical_dfs=True)


# ---------------------------------------------------------------------------
# exact solver

_INF = np.int64(2**62)


def _subset_sums(values):
    """``out[mask] = sum(values[b] for b in mask)`` for every mask."""
    out = np.zeros(1 << len(values), dtype=np.int64)
    for b, val in enumerate(values):
        half = 1 << b
        out[half:2 * half] = out[:half] + np.int64(val)
    return out


def _subset_unions(bitsets):
    out = np.zeros(1 << len(bitsets), dtype=np.int64)
    for b, bits in enumerate(bitsets):
        half = 1 << b
        out[half:2 * half] = out[:half] | np.int64(bits)
    return out


def solve_exact(g, max_level_nodes=22):
    """Minimum-weight plan by dynamic programming over the chosen set per level.

    The graph is layered, so a plan is a choice ``S_k`` of classes per level
    where every class of ``S_k`` has a predecessor in ``S_{k-1}`` and ``S_n`` is
    all terminals.  Level by level, ``F(B)`` is the cheapest way to end with
    ``S_k = B``; predecessors covering ``B`` are found with a superset-minimum
    transform.  Cost grows as ``2**p(k)`` for the widest non-terminal level, so
    graphs whose levels below ``n`` exceed ``max_level_nodes`` are refused with
    :class:`BudgetError`.  Ties resolve to the smallest bitmask, bits ordered
    lexicographically by partition.
    """
    n = g.n
    levels = [g.level(k) for k in range(n + 1)]
    widest = max(len(levels[k]) for k in range(n))
    if widest > max_level_nodes:
        raise BudgetError(
            f"level width {widest} exceeds the exact-solver cap of {max_level_nodes}",
            required=widest,
        )
    pos = [{lam: b for b, lam in enumerate(lv)} for lv in levels]

    def cover_bits(k):
        # bitset over level k+1 of the successors of each level-k node
        return [sum(1 << pos[k + 1][mu] for mu, _ in g.succ[lam]) for lam in levels[k]]

    cost = np.array([0, 0], dtype=np.int64)  # F over subsets of level 0: {} and {root}
    cost[0] = _INF
    choice = [None]
    for k in range(1, n):
        cov = _subset_unions(cover_bits(k - 1))
        width = len(levels[k])
        order = np.lexsort((np.arange(cov.shape[0]), cost))
        reach, first = np.unique(cov[order], return_index=True)
        best = np.full(1 << width, _INF, dtype=np.int64)
        arg = np.zeros(1 << width, dtype=np.int64)
        best[reach] = cost[order[first]]
        arg[reach] = order[first]
        for b in range(width):
            view_best = best.reshape(-1, 2, 1 << b)
            view_arg = arg.reshape(-1, 2, 1 << b)
            better = view_best[:, 1, :] < view_best[:, 0, :]
            view_best[:, 0, :] = np.where(better, view_best[:, 1, :], view_best[:, 0, :])
            view_arg[:, 0, :] = np.where(better, view_arg[:, 1, :], view_arg[:, 0, :])
        weights = _subset_sums([g.weights[lam] for lam in levels[k]])
        cost = np.where(best >= _INF, _INF, best + weights)
        cost[0] = _INF
        choice.append(arg)
    cov = _subset_unions(cover_bits(n - 1))
    full = (1 << len(levels[n])) - 1
    feasible = np.flatnonzero(cov == full)
    pick = feasible[np.lexsort((feasible, cost[feasible]))[0]]
    if cost[pick] >= _INF:
        raise PlanError("no arborescence reaches every terminal")

    chosen = set(levels[n])
    mask = int(pick)
    for k in range(n - 1, 0, -1):
        chosen.update(lam for b, lam in enumerate(levels[k]) if mask >> b & 1)
        mask = int(choice[k][mask])
    chosen.add(())
    return make_plan(g, _parents_from_sets(g, chosen))


def solve_greedy(g):
    """Shortest-path heuristic: repeatedly graft the cheapest path to a new terminal.

    Nodes already in the tree cost nothing, so later paths share earlier ones.
    """
    in_tree = {()}
    order = g.nodes  # level order, so predecessors come first
    remaining = set(g.terminals)
    while remaining:
        dist = {}
        via = {}
        for v in order:
            if v in in_tree:
                dist[v] = 0
                continue
            best = None
            for lam in g.pred[v]:
                d = dist[lam]
                if best is None or d < best:
                    best, via[v] = d, lam
            dist[v] = g.weights[v] + best
        target = min(remaining, key=lambda t: (dist[t], t))
        node = target
        while node not in in_tree:
            in_tree.add(node)
            node = via[node]
        remaining.difference_update(in_tree)
    return make_plan(g, _parents_from_sets(g, in_tree))


def solve(g, max_level_nodes=22):
    """Exact plan when the graph is small enough, greedy otherwise."""
    try:
        return solve_exact(g, max_level_nodes=max_level_nodes)
    except BudgetError:
        return solve_greedy(g)


def reweight_plan(plan, m):
    """Re-evaluate a plan on the graph for ``m`` modes (e.g. an ``m = n`` plan for larger ``m``)."""
    g = build_partition_graph(plan.n, m)
    parent = {mu: lam for mu, lam in plan.parent.items() if mu in g.index}
    return make_plan(g, parent, canonical_dfs=plan.canonical_dfs)


# ---------------------------------------------------------------------------
# file exchange


def export_stp(g, path, name=None):
    """Write ``g`` as a SteinLib Steiner arborescence (SAP) instance; nodes are 1-based."""
    lines = [
        "33D32945 STP File, STP Format Version 1.0",
        "",
        "SECTION Comment",
        f'Name "{name or f"partition lattice n={g.n} m={g.m}"}"',
        'Creator "loslap"',
        'Problem "Steiner Arborescence Problem"',
        "END",
        "",
        "SECTION Graph",
        f"Nodes {len(g.nodes)}",
        f"Arcs {len(g.arcs)}",
    ]
    for lam, mu in g.arcs:
        lines.append(f"A {g.index[lam] + 1} {g.index[mu] + 1} {g.weights[mu]}")
    lines += ["END", "", "SECTION Terminals", f"Terminals {len(g.terminals)}",
              f"Root {g.index[()] + 1}"]
    lines += [f"T {g.index[t] + 1}" for t in g.terminals]
    lines += ["END", "", "EOF", ""]
    Path(path).write_text("\n".join(lines))


def read_stp(path):
    """Parse the graph and terminal sections of an STP file."""
    arcs, terminals, root, nodes = [], [], None, None
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts:
            continue
        key = parts[0].upper()
        if key == "NODES":
            nodes = int(parts[1])
        elif key in ("A", "E") and len(parts) == 4:
            arcs.append((int(parts[1]), int(parts[2]), int(parts[3])))
        elif key == "T":
            terminals.append(int(parts[1]))
        elif key == "ROOT":
            root = int(parts[1])
    return {"nodes": nodes, "arcs": arcs, "terminals": terminals, "root": root}


def write_solution(g, plan, path):
    """Write a plan as a ``Finalsolution`` section listing its arcs."""
    arcs = sorted((g.index[lam] + 1, g.index[mu] + 1) for mu, lam in plan.parent.items())
    verts = sorted({g.index[lam] + 1 for lam in plan.classes})
    lines = ["SECTION Comment", 'Program "loslap"', "END", "",
             "SECTION Solutions", f"Solution 0 {plan.total_weight}", "END", "",
             "SECTION Finalsolution", f"Vertices {len(verts)}"]
    lines += [f"V {v}" for v in verts]
    lines += [f"Edges {len(arcs)}"] + [f"E {a} {b}" for a, b in arcs]
    lines += ["END", ""]
    Path(path).write_text("\n".join(lines))


_ARC_LINE = re.compile(r"^\s*[AE]\s+(\d+)\s+(\d+)\s*$", re.IGNORECASE)


def import_solution(g, path):
    """Read solution arcs (``E u v`` or ``A u v`` lines, 1-based) and validate them as a plan."""
    parent = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        match = _ARC_LINE.match(raw)
        if not match:
            continue
        a, b = int(match.group(1)) - 1, int(match.group(2)) - 1
        if not (0 <= a < len(g.nodes) and 0 <= b < len(g.nodes)):
            raise PlanError(f"{path}:{lineno}: node id out of range 1..{len(g.nodes)}")
        lam, mu = g.nodes[a], g.nodes[b]
        if mu in parent and parent[mu] != lam:
            raise PlanError(f"{path}:{lineno}: partition ({format_partition(mu)}) has two parents")
        parent[mu] = lam
    return make_plan(g, parent)


def save_plan(plan, path):
    Path(path).write_text(json.dumps(plan.to_dict(), indent=1))


def load_plan(path, g=None):
    """Load a plan cache file; when ``g`` is given the plan is validated against it."""
    try:
        obj = json.loads(Path(path).read_text())
        n, m = int(obj["n"]), int(obj["m"])
        raw = obj["parent_map"]
        weight = int(obj["total_weight"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed plan file ({exc})") from None
    parent = {parse_partition(k): parse_partition(v) for k, v in raw.items()}
    if g is None:
        g = build_partition_graph(n, m)
    plan = make_plan(g, parent)
    if (n, m) == (g.n, g.m) and plan.total_weight != weight:
        raise PlanError(f"{path}: stored total_weight {weight} != recomputed {plan.total_weight}")
    return plan


# ---------------------------------------------------------------------------
# execution


class _Slots:
    """``modes[i]`` holds the variables whose exponent is ``i``, with a cached maximum."""

    def __init__(self, n, m):
        self.modes = [set() for _ in range(n + 2)]
        self.modes[0] = set(range(m))
        self.top = [-1] * (n + 2)
        self.top[0] = m - 1

    def movable(self, i):
        """Variables that may be promoted from exponent ``i`` without double visits."""
        floor = self.top[i + 1]
        return [j for j in sorted(self.modes[i]) if j > floor]

    def promote(self, j, i):
        self.modes[i].remove(j)
        if self.top[i] == j:
            self.top[i] = max(self.modes[i], default=-1)
        self.modes[i + 1].add(j)
        self.top[i + 1] = j

    def demote(self, j, i):
        self.modes[i + 1].remove(j)
        self.top[i + 1] = max(self.modes[i + 1], default=-1)
        self.modes[i].add(j)
        if j > self.top[i]:
            self.top[i] = j


def execute_plan(u, n, plan, visitor=None, stats=None, skip_dead_ends=False, memory_cap=None):
    """Walk the original lattice along ``plan`` and report each visited node.

    A node of class ``mu`` is derived from a node of class ``plan.parent[mu]``
    by promoting one variable from exponent ``i`` to ``i + 1``; a variable may
    only join a slot whose current members are all smaller, so every monomial
    of a kept class is computed once.  With ``skip_dead_ends`` an interior
    node is skipped when none of its plan descendants can be generated from it.
    """
    u = as_interferometer(u, n)
    m = u.shape[0]
    if plan.n != n:
        raise InputError(f"plan is for n={plan.n}, traversal has n={n}")
    if any(len(lam) > m for lam in plan.classes):
        raise InputError(f"plan uses classes with more than m={m} parts")
    visitor = visitor or (lambda ev: None)
    if plan.canonical_dfs:
        traverse(u, n, visitor, stats=stats, memory_cap=memory_cap)
        return
    kids = plan.children()
    v = allocate_coefficients(n, stats, memory_cap)
    slots = _Slots(n, m)
    occ = [0] * m

    def productive(lam, level):
        if level == n:
            return True
        for mu, i in kids.get(lam, ()):
            for j in slots.movable(i):
                slots.promote(j, i)
                ok = productive(mu, level + 1)
                slots.demote(j, i)
                if ok:
                    return True
        return False

    def visit(lam, level):
        for mu, i in kids.get(lam, ()):
            for j in slots.movable(i):
                slots.promote(j, i)
                occ[j] += 1
                if not skip_dead_ends or productive(mu, level + 1):
                    ops = _kernels.update_band(u[j], n, level + 1, v)
                    if stats is not None:
                        stats.multiply_adds += ops
                        stats.nodes += 1
                        if level + 1 == n:
                            stats.leaves += 1
                    visitor(NodeEvent(tuple(occ), level + 1, v, n))
                    visit(mu, level + 1)
                occ[j] -= 1
                slots.demote(j, i)

    if n:
        visit((), 0)


def plan_amplitudes(u, n, plan, stats=None, **kwargs):
    """Leaf amplitudes produced by :func:`execute_plan`, keyed by state."""
    from .core import normalization_factor

    out = {}

    def grab(ev):
        if ev.is_leaf:
            out[ev.state] = ev.leaf_value / normalization_factor(ev.state)

    execute_plan(u, n, plan, grab, stats=stats, **kwargs)
    return out
