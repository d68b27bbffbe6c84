"""Command-line front end.

Exit status: 0 on success, 2 on invalid input, 3 when a computation is
refused for exceeding a size or memory budget.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys

from . import costmodel, steiner
from .adaptive import adaptive_distribution, brute_force_adaptive, load_policy
from .core import (
    MAX_PHOTONS,
    check_memory,
    BudgetError,
    InputError,
    OpCounter,
    SimulationError,
    column_unitarity_error,
    haar_random_unitary,
)
from .formats import format_float, format_state, load_matrix
from .lattice import iterate_amplitudes
from .noise import (
    LossModel,
    distinguishable_distribution,
    iter_lossy,
    multiphoton_distribution,
    parse_groups,
)
from .permanent import full_distribution_naive
from .slos import slos_full, slos_memory_slots

EXIT_OK, EXIT_INPUT, EXIT_BUDGET = 0, 2, 3
UNITARY_TOL = 1e-9
ENGINES = ("loslap", "slos", "permanent", "steiner-plan")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(f"{self.prog}: {message}")


def _add_matrix_args(p, need_n=True):
    p.add_argument("--matrix", help="matrix file (.json or .csv)")
    p.add_argument("--haar-seed", type=int, help="draw a Haar-random unitary with this seed")
    p.add_argument("--m", type=int, help="mode count for --haar-seed")
    if need_n:
        p.add_argument("--n", type=int, required=True, help="photons, one in each of modes 1..n")
    p.add_argument("--require-unitary", action="store_true",
                   help=f"reject matrices whose used columns deviate from orthonormal by > {UNITARY_TOL}")
    p.add_argument("--output", help="write CSV here instead of stdout")


def build_parser():
    parser = _Parser(prog="loslap", description="Strong simulation of linear optical circuits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="full output distribution")
    _add_matrix_args(p)
    p.add_argument("--engine", choices=ENGINES, default="loslap")
    p.add_argument("--plan", help="plan cache for --engine steiner-plan (solved when omitted)")
    p.add_argument("--doubled", action="store_true", help="two photons per source (loslap only)")
    p.add_argument("--sort", action="store_true", help="sort rows by state")

    p = sub.add_parser("iterate", help="stream amplitudes lazily")
    _add_matrix_args(p)
    p.add_argument("--limit", type=int, help="stop after this many rows")
    p.add_argument("--doubled", action="store_true")

    p = sub.add_parser("lossy", help="uniform loss or distinguishable groups")
    _add_matrix_args(p)
    p.add_argument("--eta", type=float, help="probability that each photon is lost")
    p.add_argument("--groups", help="mutually distinguishable photon groups, e.g. '1,2|3'")

    p = sub.add_parser("adaptive", help="feedforward on the first k modes")
    _add_matrix_args(p)
    p.add_argument("--policy", required=True, help="policy JSON file")
    p.add_argument("--engine", choices=("loslap", "slos"), default="loslap")

    p = sub.add_parser("steiner", help="traversal plans on the partition lattice")
    ssub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = ssub.add_parser("optimize")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--solver", choices=("auto", "exact", "greedy"), default="auto")
    q.add_argument("--solution", help="import an external solver's solution instead of solving")
    q.add_argument("--output", help="plan JSON path")
    q = ssub.add_parser("execute")
    _add_matrix_args(q, need_n=False)
    q.add_argument("--plan", required=True)
    q.add_argument("--skip-dead-ends", action="store_true")
    q = ssub.add_parser("export-stp")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--output", required=True)

    p = sub.add_parser("cost", help="FLOP and memory model")
    csub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = csub.add_parser("table")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q = csub.add_parser("frontier")
    q.add_argument("--n-max", type=int, default=30)
    _add_budget_args(q)
    q = csub.add_parser("crossover")
    q.add_argument("--n", type=int, default=15)
    q.add_argument("--m-min", type=int, default=15)
    q.add_argument("--m-max", type=int, default=60)
    q.add_argument("--m-step", type=int, default=5)
    q.add_argument("--memory-bytes", type=int, help="add the memory floor on the mask size")
    for q in csub.choices.values():
        q.add_argument("--output")

    p = sub.add_parser("compare", help="run two engines and report their difference")
    _add_matrix_args(p)
    p.add_argument("--engines", default="loslap,permanent",
                   help=f"two of {','.join(ENGINES)}")
    return parser


def _add_budget_args(q):
    d = costmodel.Budget()
    q.add_argument("--memory-bytes", type=int, default=d.memory_bytes)
    q.add_argument("--flops-per-second", type=float, default=d.flops_per_second)
    q.add_argument("--wall-seconds", type=float, default=d.wall_seconds)


# ---------------------------------------------------------------------------
# validation


def _check_n(n):
    if n is None:
        return
    if n < 1:
        raise InputError(f"--n must be >= 1, got {n}")
    if n > MAX_PHOTONS:
        raise InputError(f"--n={n} exceeds the subset-mask cap of {MAX_PHOTONS}")


def resolve_matrix(args, n):
    """The interferometer named by ``--matrix`` or ``--haar-seed``/``--m``."""
    if (args.matrix is None) == (args.haar_seed is None):
        raise InputError("give exactly one of --matrix or --haar-seed")
    if args.matrix is not None:
        if args.m is not None:
            raise InputError("--m is only used with --haar-seed")
        u = load_matrix(args.matrix)
    else:
        if args.m is None:
            raise InputError("--haar-seed needs --m")
        if args.m < 1:
            raise InputError(f"--m must be >= 1, got {args.m}")
        u = haar_random_unitary(args.m, args.haar_seed)
    if n is not None and n > u.shape[1]:
        raise InputError(f"--n={n} exceeds the matrix's {u.shape[1]} columns")
    if args.require_unitary:
        dev = column_unitarity_error(u[:, :n] if n is not None else u)
        if dev > UNITARY_TOL:
            raise InputError(
                f"--require-unitary: columns deviate from orthonormal by {dev:.3g} > {UNITARY_TOL}"
            )
    return u


@contextlib.contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _amp_row(state, amp):
    amp = complex(amp)
    return [format_state(state), format_float(amp.real), format_float(amp.imag),
            format_float(amp.real ** 2 + amp.imag ** 2)]


AMP_HEADER = ["state", "re", "im", "probability"]


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


# ---------------------------------------------------------------------------
# commands


def _precheck(engine, u, n):
    # refuse before any output is written; the streaming engines allocate lazily
    if engine == "slos":
        check_memory(slos_memory_slots(u.shape[0], n), f"expansion of n={n}")
    elif engine != "permanent":
        check_memory(1 << n, f"coefficient vector for n={n}")


def _engine_stream(engine, u, n, stats, plan_path=None):
    _precheck(engine, u, n)
    if engine == "loslap":
        return iterate_amplitudes(u, n, stats=stats)
    if engine == "slos":
        return iter(slos_full(u, n, stats=stats).items())
    if engine == "permanent":
        return full_distribution_naive(u, n)
    if engine == "steiner-plan":
        m = u.shape[0]
        g = steiner.build_partition_graph(n, m)
        plan = steiner.load_plan(plan_path, g) if plan_path else steiner.solve(g)
        return iter(steiner.plan_amplitudes(u, n, plan, stats=stats).items())
    raise InputError(f"unknown engine {engine!r}")


def cmd_simulate(args):
    _check_n(args.n)
    u = resolve_matrix(args, args.n)
    if args.doubled:
        if args.engine != "loslap":
            raise InputError("--doubled is only supported with --engine loslap")
        _precheck("loslap", u, 2 * args.n)
        rows = multiphoton_distribution(u, args.n, doubled=True)
    else:
        if args.plan and args.engine != "steiner-plan":
            raise InputError("--plan needs --engine steiner-plan")
        rows = _engine_stream(args.engine, u, args.n, None, args.plan)
    if args.sort:
        rows = sorted(rows)
    with _sink(args.output) as fh:
        w = _writer(fh)
        w.writerow(AMP_HEADER)
        for state, amp in rows:
            w.writerow(_amp_row(state, amp))


def cmd_iterate(args):
    _check_n(args.n)
    if args.limit is not None and args.limit < 0:
        raise InputError(f"--limit must be >= 0, got {args.limit}")
    u = resolve_matrix(args, args.n)
    _precheck("loslap", u, 2 * args.n if args.doubled else args.n)
    stream = multiphoton_distribution(u, args.n, doubled=args.doubled)
    with _sink(args.output) as fh:
        w = _writer(fh)
        w.writerow(AMP_HEADER)
        for i, (state, amp) in enumerate(stream):
            if args.limit is not None and i >= args.limit:
                break
            w.writerow(_amp_row(state, amp))
            fh.flush()


def cmd_lossy(args):
    _check_n(args.n)
    if (args.eta is None) == (args.groups is None):
        raise InputError("give exactly one of --eta or --groups")
    loss = LossModel(args.eta) if args.eta is not None else None
    u = resolve_matrix(args, args.n)
    with _sink(args.output) as fh:
        w = _writer(fh)
        if loss is not None:
            w.writerow(["photons", "state", "probability"])
            for state, p in iter_lossy(u, args.n, loss):
                w.writerow([sum(state), format_state(state), format_float(p)])
        else:
            dist = distinguishable_distribution(u, args.n, parse_groups(args.groups))
            w.writerow(["state", "probability"])
            for state, p in dist.items():
                w.writerow([format_state(state), format_float(p)])


def cmd_adaptive(args):
    _check_n(args.n)
    u = resolve_matrix(args, args.n)
    policy = load_policy(args.policy, u.shape[0])
    policy.check_total(args.n)
    if args.engine == "loslap":
        result = adaptive_distribution(policy, u, args.n)
    else:
        result = brute_force_adaptive(policy, u, args.n)
    with _sink(args.output) as fh:
        w = _writer(fh)
        w.writerow(["outcome"] + AMP_HEADER)
        for outcome in sorted(result):
            for state, amp in sorted(result[outcome].items()):
                w.writerow([format_state(outcome)] + _amp_row(state, amp))


def cmd_steiner(args):
    if args.action == "export-stp":
        _check_n(args.n)
        g = steiner.build_partition_graph(args.n, args.m)
        steiner.export_stp(g, args.output)
        print(f"nodes={len(g.nodes)} arcs={len(g.arcs)} terminals={len(g.terminals)}")
        return
    if args.action == "optimize":
        _check_n(args.n)
        g = steiner.build_partition_graph(args.n, args.m)
        if args.solution:
            plan = steiner.import_solution(g, args.solution)
        elif args.solver == "exact":
            plan = steiner.solve_exact(g)
        elif args.solver == "greedy":
            plan = steiner.solve_greedy(g)
        else:
            plan = steiner.solve(g)
        if args.output:
            steiner.save_plan(plan, args.output)
        full = g.full_weight()
        kept = len(plan.classes)
        print(f"n={g.n} m={g.m} classes={kept}/{len(g.nodes)} "
              f"flops={plan.total_weight} full_flops={full} "
              f"gain={100.0 * (full - plan.total_weight) / full:.1f}%")
        return
    plan = steiner.load_plan(args.plan)
    u = resolve_matrix(args, plan.n)
    stats = OpCounter()
    amps = steiner.plan_amplitudes(u, plan.n, plan, stats=stats,
                                   skip_dead_ends=args.skip_dead_ends)
    with _sink(args.output) as fh:
        w = _writer(fh)
        w.writerow(AMP_HEADER)
        for state, amp in amps.items():
            w.writerow(_amp_row(state, amp))
    print(f"flops={stats.flops} plan_weight={plan.total_weight}", file=sys.stderr)


def cmd_cost(args):
    with _sink(args.output) as fh:
        if args.action == "table":
            _check_n(args.n)
            costmodel.write_csv(fh, costmodel.TABLE_HEADER, costmodel.table_rows(args.n, args.m))
        elif args.action == "frontier":
            budget = costmodel.Budget(args.memory_bytes, args.flops_per_second, args.wall_seconds)
            rows = costmodel.frontier_rows(range(1, args.n_max + 1), budget)
            costmodel.write_csv(fh, costmodel.FRONTIER_HEADER, rows)
        else:
            _check_n(args.n)
            if args.m_step < 1 or args.m_min < 1 or args.m_max < args.m_min:
                raise InputError("need 1 <= --m-min <= --m-max and --m-step >= 1")
            modes = range(args.m_min, args.m_max + 1, args.m_step)
            rows = costmodel.region_rows(args.n, modes, args.memory_bytes)
            costmodel.write_csv(fh, costmodel.REGION_HEADER, rows)


def cmd_compare(args):
    _check_n(args.n)
    names = [e.strip() for e in args.engines.split(",")]
    if len(names) != 2 or any(e not in ENGINES for e in names):
        raise InputError(f"--engines needs two of {','.join(ENGINES)}, got {args.engines!r}")
    u = resolve_matrix(args, args.n)
    results, counts = [], []
    for name in names:
        stats = OpCounter()
        results.append(dict(_engine_stream(name, u, args.n, stats)))
        if name == "permanent":
            counts.append(f"{costmodel.flops_permanent_all(args.n, u.shape[0])} (model)")
        else:
            counts.append(str(stats.flops))
    a, b = results
    if set(a) != set(b):
        raise SimulationError("engines produced different output state sets")
    diff = max((abs(a[s] - b[s]) for s in a), default=0.0)
    with _sink(args.output) as fh:
        fh.write(f"engines={names[0]},{names[1]} states={len(a)} max_abs_diff={diff:.3e}\n")
        fh.write(f"flops_{names[0]}={counts[0]} flops_{names[1]}={counts[1]}\n")


COMMANDS = {
    "simulate": cmd_simulate,
    "iterate": cmd_iterate,
    "lossy": cmd_lossy,
    "adaptive": cmd_adaptive,
    "steiner": cmd_steiner,
    "cost": cmd_cost,
    "compare": cmd_compare,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except BrokenPipeError:  # pragma: no cover - downstream closed early
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except (InputError, SimulationError, OSError, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
