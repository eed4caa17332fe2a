"""Command-line entry point: single runs, seeded benchmarks, the exhaustive oracle."""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graphops import Topology, prim_mst
from .hatsga import ElitismConfig, SearchConfig, SearchResult, search
from .netmodel import Network, NetworkError, load_network
from .oracle import OracleReport, TreeCountError, exhaustive_min_loss, format_open, rank_of, report_csv
from .powerflow import IslandingError, SolverConfig, eq1_loss, solve

RNG_NAME = "numpy PCG64 (default_rng)"
PRIORITY_RANGE = (1, 1000)
Z95 = 1.96

# Published IEEE 14-bus figures, shown for reference only.
LITERATURE_LOSS_MW = (
    ("Original Network (IEEE-14)", 13.436),
    ("PSO", 9.9159),
    ("MPSO", 8.5053),
    ("ABC", 6.4611),
    ("FSS", 7.8457),
    ("HATSGA", 4.2796),
    ("GSA", 3.2764),
)
LITERATURE_TREE_COUNT = 3909


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunStatistics:
    mean: float
    stddev: float
    ci95_low: float
    ci95_high: float

    @classmethod
    def of(cls, values) -> RunStatistics:
        """Sample statistics over the finite entries of ``values``."""
        x = np.asarray(values, dtype=float)
        x = x[np.isfinite(x)]
        if not len(x):
            return cls(math.inf, math.inf, math.inf, math.inf)
        mean = float(np.mean(x))
        sd = float(np.std(x, ddof=1)) if len(x) > 1 else 0.0
        half = Z95 * sd / math.sqrt(len(x))
        return cls(mean, sd, mean - half, mean + half)


@dataclass(frozen=True)
class BenchRow:
    run_index: int
    initial_open: tuple[int, ...]
    best_open: tuple[int, ...]
    loss_mw: float
    seconds: float
    evaluations: int


def random_priorities(net: Network, rng: np.random.Generator) -> dict[int, int]:
    lo, hi = PRIORITY_RANGE
    draws = rng.integers(lo, hi + 1, size=len(net.branches))
    return {s: int(v) for s, v in zip(net.switch_ids, draws)}


def run_bench(net: Network, runs: int, seed: int, solver_cfg: SolverConfig,
              elitism_cfg: ElitismConfig, search_cfg: SearchConfig) -> list[BenchRow]:
    """``runs`` searches from pairwise distinct Prim trees of seeded random priorities."""
    if runs < 2:
        raise UsageError("runs must be >= 2")
    rng = np.random.default_rng(seed)
    used: set[tuple[int, ...]] = set()
    rows: list[BenchRow] = []
    rejections = 0
    while len(rows) < runs:
        pr = random_priorities(net, rng)
        key = prim_mst(net, pr).key
        if key in used:
            rejections += 1
            if rejections > 100 * runs:
                raise UsageError(f"could not find {runs} distinct initial topologies "
                                 f"({len(rows)} found after {rejections} rejections)")
            continue
        used.add(key)
        res = search(net, pr, solver_cfg, elitism_cfg, search_cfg)
        rows.append(BenchRow(len(rows) + 1, tuple(res.initial_open), res.best_topology.key,
                             res.best_loss, res.elapsed_seconds, res.evaluations))
    return rows


def bench_csv(rows: list[BenchRow], seed: int, timing: bool = True) -> str:
    finite = sum(math.isfinite(r.loss_mw) for r in rows)
    out = [f"# rng={RNG_NAME} seed={seed} priorities={PRIORITY_RANGE[0]}..{PRIORITY_RANGE[1]}",
           f"# ci95 = mean +/- {Z95}*stddev/sqrt(N), normal approximation; "
           f"loss statistics over the {finite} of {len(rows)} runs with a converged best",
           "run_index,initial_open,best_open,loss_mw,seconds"]
    for r in rows:
        sec = repr(r.seconds) if timing else ""
        out.append(f"{r.run_index},{format_open(r.initial_open)},{format_open(r.best_open)},{r.loss_mw!r},{sec}")
    loss = RunStatistics.of([r.loss_mw for r in rows])
    secs = RunStatistics.of([r.seconds for r in rows]) if timing else None
    cell = lambda st, f: repr(getattr(st, f)) if st else ""
    ci = lambda st: f"{st.ci95_low!r};{st.ci95_high!r}" if st else ""
    out.append(f"mean,,,{cell(loss, 'mean')},{cell(secs, 'mean')}")
    out.append(f"stddev,,,{cell(loss, 'stddev')},{cell(secs, 'stddev')}")
    out.append(f"ci95,,,{ci(loss)},{ci(secs)}")
    return "\n".join(out) + "\n"


def _configs(args) -> tuple[SolverConfig, ElitismConfig, SearchConfig]:
    try:
        return (SolverConfig(tolerance=args.tol, max_iterations=args.max_iter),
                ElitismConfig(keep_ratio=args.keep_ratio),
                SearchConfig(rebase=not args.fixed_base, max_evaluations=args.max_evals))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(path: str) -> Network:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {path}")
    return load_network(p)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _describe(res: SearchResult) -> str:
    return (f"initial_open={format_open(res.initial_open)} best_open={format_open(res.best_topology)} "
            f"loss_mw={res.best_loss:.6f} evaluations={res.evaluations} "
            f"seconds={res.elapsed_seconds:.4f}")


def cmd_run(args) -> int:
    net = _load(args.network)
    solver_cfg, elitism_cfg, search_cfg = _configs(args)
    pr = random_priorities(net, np.random.default_rng(args.seed))
    res = search(net, pr, solver_cfg, elitism_cfg, search_cfg)
    print(_describe(res))
    return 0


def cmd_bench(args) -> int:
    if args.runs < 2:
        raise UsageError("runs must be >= 2")
    net = _load(args.network)
    rows = run_bench(net, args.runs, args.seed, *_configs(args))
    _emit(bench_csv(rows, args.seed, timing=not args.no_timing), args.out)
    return 0


def _oracle_summary(net: Network, report: OracleReport) -> list[str]:
    lines = [f"# tree_count {report.tree_count}"]
    if net.n_bus == 14 and len(net.branches) == 20:
        verdict = "agreement" if report.tree_count == LITERATURE_TREE_COUNT else "MISMATCH"
        lines.append(f"# published IEEE 14-bus count {LITERATURE_TREE_COUNT}: {verdict}")
    lines.append(f"# converged {report.converged_count} of {report.tree_count}")
    if report.global_best:
        topo, loss = report.global_best
        lines.append(f"# global_best open={format_open(topo)} loss_mw={loss!r}")
    return lines


def cmd_oracle(args) -> int:
    net = _load(args.network)
    solver_cfg, _, _ = _configs(args)
    report = exhaustive_min_loss(net, solver_cfg)
    print("\n".join(_oracle_summary(net, report)))
    _emit(report_csv(report), args.out)
    return 0


def cmd_compare(args) -> int:
    net = _load(args.network)
    solver_cfg, elitism_cfg, search_cfg = _configs(args)
    meshed = Topology.from_closed(net, net.switch_ids)
    sol = solve(net, meshed, solver_cfg)
    if not sol.converged:
        print(f"meshed base case did not converge (mismatch {sol.max_mismatch:.3e})", file=sys.stderr)
        return 2
    rows = run_bench(net, args.runs, args.seed, solver_cfg, elitism_cfg, search_cfg)
    report = exhaustive_min_loss(net, solver_cfg)
    best = min(rows, key=lambda r: r.loss_mw)
    stats = RunStatistics.of([r.loss_mw for r in rows])

    print("Literature constants (published values, not recomputed here)")
    for name, value in LITERATURE_LOSS_MW:
        print(f"  {name:<30s} {value:>10.4f} MW")
    print(f"  {'spanning trees (IEEE 14-bus)':<30s} {LITERATURE_TREE_COUNT:>10d}")
    print("Computed by this implementation")
    print(f"  {'meshed base case, total loss':<30s} {sol.loss_total:>10.4f} MW")
    print(f"  {'meshed base case, series loss':<30s} {eq1_loss(net, meshed, sol):>10.4f} MW")
    print(f"  {'search best of %d runs' % len(rows):<30s} {best.loss_mw:>10.4f} MW  open {format_open(best.best_open)}")
    print(f"  {'search mean [ci95]':<30s} {stats.mean:>10.4f} MW  [{stats.ci95_low:.4f}, {stats.ci95_high:.4f}]")
    print(f"  {'search best oracle rank':<30s} {rank_of(report, best.loss_mw):>10d}")
    print(f"  {'oracle global minimum':<30s} {report.best_loss:>10.4f} MW  open {format_open(report.global_best[0])}")
    print(f"  {'spanning trees':<30s} {report.tree_count:>10d}  ({report.converged_count} converged)")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("network", help="network file (.net)")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--keep-ratio", type=float, default=ElitismConfig.keep_ratio)
    common.add_argument("--tol", type=float, default=SolverConfig.tolerance)
    common.add_argument("--max-iter", type=int, default=SolverConfig.max_iterations)
    common.add_argument("--max-evals", type=int, default=SearchConfig.max_evaluations,
                        help="power-flow evaluations allowed per search")
    common.add_argument("--fixed-base", action="store_true",
                        help="single sweep against the initial tree only")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--format", choices=["csv"], default="csv")

    parser = _Parser(prog="netreconf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="one search").set_defaults(func=cmd_run)
    bench = sub.add_parser("bench", parents=[common], help="seeded multi-run benchmark")
    bench.add_argument("--runs", type=int, default=50)
    bench.add_argument("--no-timing", action="store_true",
                       help="leave the seconds column empty so output is byte-reproducible")
    bench.set_defaults(func=cmd_bench)
    sub.add_parser("oracle", parents=[common], help="exhaustive spanning-tree census").set_defaults(func=cmd_oracle)
    compare = sub.add_parser("compare", parents=[common], help="bench + oracle against published figures")
    compare.add_argument("--runs", type=int, default=50)
    compare.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (UsageError, NetworkError, IslandingError, TreeCountError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
