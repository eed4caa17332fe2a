"""Exhaustive ground truth: solve every spanning tree, rank the losses."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .graphops import Topology, count_spanning_trees, enumerate_spanning_trees
from .hatsga import evaluate
from .netmodel import Network
from .powerflow import SolverConfig

MAX_TREES = 100_000
LOSS_TOL = 1e-9  # MW


class TreeCountError(ValueError):
    pass


@dataclass(frozen=True)
class OracleReport:
    tree_count: int
    global_best: tuple[Topology, float] | None
    converged_count: int
    loss_histogram: tuple[tuple[float, Topology], ...]  # ascending loss, then open-set key

    @property
    def best_loss(self) -> float:
        return self.global_best[1] if self.global_best else math.inf


def exhaustive_min_loss(net: Network, cfg: SolverConfig | None = None,
                        max_trees: int = MAX_TREES) -> OracleReport:
    """Solve the power flow on every spanning tree of ``net``.

    Trees whose power flow diverges are counted but left out of the ranking.
    """
    cfg = cfg or SolverConfig()
    expected = count_spanning_trees(net)
    if expected > max_trees:
        raise TreeCountError(f"{expected} spanning trees exceeds the limit of {max_trees}")
    rows = []
    total = 0
    for tree in enumerate_spanning_trees(net):
        total += 1
        loss, _ = evaluate(net, tree, cfg)
        if math.isfinite(loss):
            rows.append((loss, tree))
    rows.sort(key=lambda r: (r[0], r[1].key))
    best = (rows[0][1], rows[0][0]) if rows else None
    return OracleReport(total, best, len(rows), tuple(rows))


def rank_of(report: OracleReport, loss: float) -> int:
    """1-based competition rank of ``loss`` among the converged trees."""
    losses = [l for l, _ in report.loss_histogram]
    return 1 + bisect.bisect_left(losses, loss - LOSS_TOL)


def format_open(topo_or_key) -> str:
    key = topo_or_key.key if isinstance(topo_or_key, Topology) else topo_or_key
    return "-".join(str(s) for s in sorted(key))


def report_csv(report: OracleReport) -> str:
    losses = [l for l, _ in report.loss_histogram]
    lines = ["rank,loss_mw,open_switches"]
    for loss, topo in report.loss_histogram:
        rank = 1 + bisect.bisect_left(losses, loss - LOSS_TOL)
        lines.append(f"{rank},{loss!r},{format_open(topo)}")
    return "\n".join(lines) + "\n"
