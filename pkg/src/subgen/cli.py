"""Experiment harness: parameter sweeps over the coding framework.

Four sweep experiments mirror the simulation studies (tradeoff curves,
partitioner comparison, strategy comparison, merging benefit) plus a
fixture regression report. Output is deterministic CSV under a fixed seed.
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass

from .errors import ConfigError, SizeLimitExceeded
from .idnc import (build_graph, dumps_solution, reduce_diversity, solve_exact,
                   solve_heuristic)
from .model import (EmptySfm, ErasureChannel, demand_profile, load_fixture,
                    run_systematic)
from .partition import (analytic_metrics, partition_classic, partition_direct,
                        partition_smart)
from .transmit import (StrategyConfig, measure, run_semi_online,
                       run_sequential, write_trace)

CSV_FIELDS = ["experiment", "n_receivers", "g_policy", "partitioner",
              "strategy", "merging", "metric", "mean", "stderr", "trials",
              "seed"]

_FRACTION_POLICIES = {"quarter": 0.25, "third": 1 / 3, "half": 0.5,
                      "full": 1.0}

EXPERIMENTS = ("tradeoff", "partitioners", "strategies", "merging",
               "fixtures")


@dataclass
class ExperimentConfig:
    experiment: str = "tradeoff"
    k_total: int = 20
    receivers: tuple = (5, 50, 5)  # start, stop (inclusive), step
    p_e: float = 0.2
    trials: int = 500
    g_policy: tuple = ()
    partitioner: str = "direct"
    strategy: str = "sequential"
    merging: bool = False
    decode_mode: str = "idealized"
    field_m: int = 8
    seed: int = 0
    out: str | None = None
    trace: str | None = None
    dump_solution: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.k_total < 1:
            raise ConfigError("k_total must be >= 1")
        start, stop, step = self.receivers
        if start < 1 or stop < start or step < 1:
            raise ConfigError(f"bad receiver grid {self.receivers}")
        if not 0.0 <= self.p_e < 1.0:
            raise ConfigError("p_e must be in [0, 1)")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.partitioner not in ("direct", "smart", "classic"):
            raise ConfigError(f"unknown partitioner {self.partitioner!r}")
        if self.strategy not in ("sequential", "semi_online"):
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        for p in self.g_policy:
            resolve_g(p, 10)  # raises on malformed policies

    def receiver_grid(self):
        start, stop, step = self.receivers
        return range(start, stop + 1, step)


def resolve_g(policy: str, u_idnc: int) -> int:
    """Map a g policy token to a concrete size for one instance."""
    if policy in _FRACTION_POLICIES:
        return max(1, min(u_idnc, round(_FRACTION_POLICIES[policy] * u_idnc)))
    try:
        g = int(policy)
    except ValueError:
        raise ConfigError(f"bad g policy {policy!r}") from None
    if g < 1:
        raise ConfigError(f"bad g policy {policy!r}")
    return min(g, u_idnc)


def _solve(sfm):
    graph = build_graph(sfm)
    try:
        return solve_exact(graph, sfm)
    except SizeLimitExceeded:
        return solve_heuristic(graph, sfm)


def _partition(name, solution, g, sfm):
    if name == "classic":
        return partition_classic(sfm, min(g, sfm.n_packets))
    fn = partition_direct if name == "direct" else partition_smart
    return fn(solution, g, sfm)


class _Cell:
    """Accumulates one metric column of one CSV row."""

    def __init__(self):
        self.values = []

    def add(self, v):
        self.values.append(float(v))

    def mean(self):
        return sum(self.values) / len(self.values)

    def stderr(self):
        n = len(self.values)
        if n < 2:
            return 0.0
        mu = self.mean()
        var = sum((v - mu) ** 2 for v in self.values) / (n - 1)
        return math.sqrt(var / n)


def _instances(config: ExperimentConfig, n_total: int):
    """Systematic-phase instances with their solved IDNC solutions."""
    channel = ErasureChannel(config.p_e, config.seed)
    for trial in range(config.trials):
        sfm = run_systematic(config.k_total, n_total, channel,
                             stream=(n_total, trial))
        if isinstance(sfm, EmptySfm):
            continue
        yield trial, sfm, _solve(sfm)


def run_experiment(config: ExperimentConfig):
    """Execute one sweep; returns CSV rows as dicts (fixtures: empty)."""
    if config.experiment == "fixtures":
        return []
    plans = {
        "tradeoff": {
            "policies": config.g_policy or ("1", "2", "3", "4", "half",
                                            "full"),
            "partitioners": (config.partitioner,),
            "analytic": True,
        },
        "partitioners": {
            "policies": config.g_policy or ("quarter", "half"),
            "partitioners": ("direct", "smart"),
            "analytic": True,
        },
        "strategies": {
            "policies": config.g_policy or ("third", "half", "full"),
            "partitioners": ("smart",),
            "analytic": False,
            "strategies": ("sequential", "semi_online"),
            "merging": (False,),
        },
        "merging": {
            "policies": config.g_policy or ("half",),
            "partitioners": ("smart",),
            "analytic": False,
            "strategies": ("semi_online",),
            "merging": (False, True),
        },
    }[config.experiment]
    rows = []
    channel = ErasureChannel(config.p_e, config.seed)
    traced = dumped = False
    for n_total in config.receiver_grid():
        cells = {}
        for trial, sfm, solution in _instances(config, n_total):
            if config.dump_solution and not dumped:
                with open(config.dump_solution, "w") as fh:
                    fh.write(dumps_solution(solution))
                dumped = True
            for policy in plans["policies"]:
                g = resolve_g(policy, solution.cardinality)
                for part_name in plans["partitioners"]:
                    if plans["analytic"]:
                        part = _partition(part_name, solution, g, sfm)
                        met = analytic_metrics(part, sfm)
                        key = (n_total, policy, part_name, "analytic", "off")
                        cells.setdefault(key, (_Cell(), _Cell()))
                        cells[key][0].add(met.u_g)
                        cells[key][1].add(met.d_g)
                        continue
                    sol_t = reduce_diversity(solution) if g >= 2 else solution
                    part = _partition(part_name, sol_t, g, sfm)
                    for strat in plans["strategies"]:
                        for merge in plans["merging"]:
                            run_cfg = StrategyConfig(
                                strategy=strat, merging=merge,
                                decode_mode=config.decode_mode,
                                field_m=config.field_m)
                            runner = (run_sequential if strat == "sequential"
                                      else run_semi_online)
                            log = runner(part, sfm, channel, run_cfg,
                                         stream=(n_total, trial))
                            if config.trace and not traced:
                                with open(config.trace, "w", newline="") as fh:
                                    write_trace(log, fh)
                                traced = True
                            completion, delay = measure(log)
                            key = (n_total, policy, part_name, strat,
                                   "on" if merge else "off")
                            cells.setdefault(key, (_Cell(), _Cell()))
                            cells[key][0].add(completion)
                            cells[key][1].add(delay)
        for key, (comp, delay) in cells.items():
            n_total_, policy, part_name, strat, merge = key
            for metric, cell in (("completion", comp), ("delay", delay)):
                rows.append({
                    "experiment": config.experiment,
                    "n_receivers": n_total_,
                    "g_policy": policy,
                    "partitioner": part_name,
                    "strategy": strat,
                    "merging": merge,
                    "metric": metric,
                    "mean": f"{cell.mean():.6f}",
                    "stderr": f"{cell.stderr():.6f}",
                    "trials": len(cell.values),
                    "seed": config.seed,
                })
    rows.sort(key=lambda r: tuple(str(r[f]) for f in CSV_FIELDS[:7]))
    return rows


def write_csv(rows, fileobj):
    writer = csv.DictWriter(fileobj, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


# --- fixture regression report ---------------------------------------------

def _fixture_checks():
    checks = []
    f1 = load_fixture("f1")
    f2 = load_fixture("f2")
    s1 = solve_exact(build_graph(f1), f1)
    s2 = solve_exact(build_graph(f2), f2)
    expected_sets = {(2, 3, 7), (4, 8), (1, 5), (1, 6)}
    checks.append(("f1", "solution sets", sorted(expected_sets),
                   sorted(s.packets for s in s1.sets)))
    checks.append(("f1", "U_IDNC", 4, s1.cardinality))
    m = analytic_metrics(partition_direct(s1, 1, f1), f1)
    checks.append(("f1", "D_IDNC", Fraction(32, 14), Fraction(m.d_g).limit_denominator(10 ** 6)))
    m = analytic_metrics(partition_direct(s1, s1.cardinality, f1), f1)
    checks.append(("f1", "U_RLNC", 4, m.u_g))
    checks.append(("f1", "D_RLNC", Fraction(50, 14),
                   Fraction(m.d_g).limit_denominator(10 ** 6)))
    m = analytic_metrics(partition_direct(s1, 2, f1), f1)
    checks.append(("f1", "U_g (g=2)", 4, m.u_g))
    checks.append(("f1", "D_g (g=2)", Fraction(38, 14),
                   Fraction(m.d_g).limit_denominator(10 ** 6)))
    m = analytic_metrics(partition_classic(f1, 4), f1)
    checks.append(("f1", "classic U_g (g=4)", 7, m.u_g))
    profile = demand_profile(f1)
    checks.append(("f1", "W_max", 4, profile.w_max))
    checks.append(("f2", "U_RLNC", 2,
                   analytic_metrics(partition_direct(s2, 4, f2), f2).u_g))
    checks.append(("f2", "D_RLNC", Fraction(2),
                   Fraction(analytic_metrics(partition_direct(s2, 4, f2),
                                             f2).d_g).limit_denominator(10 ** 6)))
    m = analytic_metrics(partition_direct(s2, 1, f2), f2)
    checks.append(("f2", "U_IDNC", 4, m.u_g))
    checks.append(("f2", "D_IDNC", Fraction(5, 2),
                   Fraction(m.d_g).limit_denominator(10 ** 6)))
    return checks, (s1, s2)


def run_fixture_report():
    """Text table of every fixture metric beside its expected value."""
    checks, solutions = _fixture_checks()
    lines = [f"{'fixture':8} {'quantity':20} {'expected':>12} "
             f"{'actual':>12} result"]
    ok = True
    for fixture, name, expected, actual in checks:
        good = expected == actual
        ok = ok and good
        lines.append(f"{fixture:8} {name:20} {str(expected):>12} "
                     f"{str(actual):>12} {'pass' if good else 'FAIL'}")
    lines.append("all checks passed" if ok else "FIXTURE FAILURES")
    return "\n".join(lines) + "\n", ok, solutions


def _parse_receivers(text):
    parts = [int(x) for x in text.split(":")]
    if len(parts) == 1:
        return (parts[0], parts[0], 1)
    if len(parts) == 2:
        return (parts[0], parts[1], 5)
    if len(parts) == 3:
        return tuple(parts)
    raise ConfigError(f"bad receiver grid {text!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="subgen",
        description="Sub-generation coding experiments (IDNC..RLNC spectrum)")
    parser.add_argument("--experiment", choices=EXPERIMENTS,
                        default="tradeoff")
    parser.add_argument("--kt", type=int, default=20,
                        help="packets per block (default 20)")
    parser.add_argument("--receivers", default="5:50:5",
                        help="receiver grid start:stop:step")
    parser.add_argument("--pe", type=float, default=0.2)
    parser.add_argument("--trials", type=int, default=500)
    parser.add_argument("--g", default="",
                        help="comma list of g policies "
                             "(1,2,...,quarter,third,half,full)")
    parser.add_argument("--partitioner",
                        choices=("direct", "smart", "classic"),
                        default="direct")
    parser.add_argument("--strategy", choices=("sequential", "semi_online"),
                        default="sequential")
    parser.add_argument("--merge", action="store_true")
    parser.add_argument("--decode-mode",
                        choices=("idealized", "concrete_gf"),
                        default="idealized")
    parser.add_argument("--field-bits", type=int, choices=(1, 2, 4, 8),
                        default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="CSV output path")
    parser.add_argument("--trace", default=None,
                        help="write a per-slot trace of the first run")
    parser.add_argument("--dump-solution", default=None,
                        help="write the first solved instance's coding sets")
    args = parser.parse_args(argv)
    try:
        config = ExperimentConfig(
            experiment=args.experiment,
            k_total=args.kt,
            receivers=_parse_receivers(args.receivers),
            p_e=args.pe,
            trials=args.trials,
            g_policy=tuple(x for x in args.g.split(",") if x),
            partitioner=args.partitioner,
            strategy=args.strategy,
            merging=args.merge,
            decode_mode=args.decode_mode,
            field_m=args.field_bits,
            seed=args.seed,
            out=args.out,
            trace=args.trace,
            dump_solution=args.dump_solution,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if config.experiment == "fixtures":
        report, ok, solutions = run_fixture_report()
        sys.stdout.write(report)
        if config.dump_solution:
            with open(config.dump_solution, "w") as fh:
                for sol in solutions:
                    fh.write(dumps_solution(sol))
        return 0 if ok else 1

    rows = run_experiment(config)
    if config.out:
        with open(config.out, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
