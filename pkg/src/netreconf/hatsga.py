"""Hybrid tabu-search / elitism reconfiguration search.

The search starts from a Prim tree, closes each of its open switches in turn,
keeps the most promising edges of the resulting loop (elitism) and evaluates
every not-yet-seen radial topology obtained by opening one of them.  All
evaluations live in a tabu list that is never cleared.
"""
from __future__ import annotations

import math
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .graphops import SectorLoop, Topology, fundamental_cycle, is_radial, prim_mst
from .netmodel import Network
from .powerflow import PowerFlowSolution, SolverConfig, eq1_loss, solve

Evaluator = Callable[[Network, Topology, SolverConfig], tuple[float, PowerFlowSolution]]


def evaluate(net: Network, topo: Topology, cfg: SolverConfig) -> tuple[float, PowerFlowSolution]:
    """Series loss of ``topo`` in MW; ``inf`` when the power flow diverges."""
    sol = solve(net, topo, cfg)
    return (eq1_loss(net, topo, sol) if sol.converged else math.inf), sol


class TabuList:
    """Every evaluated open-switch set with its loss, in evaluation order."""

    def __init__(self, net: Network):
        self._net = net
        self.entries: dict[tuple[int, ...], float] = {}
        self.best: tuple[Topology, float] | None = None

    def __contains__(self, topo: Topology) -> bool:
        return topo.key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, topo: Topology, loss: float) -> None:
        if topo.key in self.entries:
            raise ValueError(f"open set {topo.key} already evaluated")
        if not is_radial(self._net, topo):
            raise ValueError(f"open set {topo.key} is not radial")
        self.entries[topo.key] = loss
        if self.best is None or loss < self.best[1]:
            self.best = (topo, loss)


@dataclass(frozen=True)
class ElitismConfig:
    keep_ratio: float = 0.6

    def __post_init__(self):
        if not 0 < self.keep_ratio <= 1:
            raise ValueError("keep_ratio must be in (0, 1]")

    def keep_count(self, n: int) -> int:
        # round() guards against 0.6 * 5 = 3.0000000000000004
        return max(1, math.ceil(round(self.keep_ratio * n, 9)))


def edge_scores(net: Network, loop: SectorLoop, sol: PowerFlowSolution) -> dict[int, float]:
    """Estimated series-loss contribution of each loop edge on the pre-close tree.

    The trigger carries no flow in the tree, so it is scored with its own
    resistance times the mean (P^2 + Q^2) / V^2 of the other loop edges.
    """
    flow = _flow_terms(net, sol)
    others = [s for s in loop.loop_edges if s != loop.trigger]
    scores = {s: net.branch(s).r * flow[s - 1] for s in others}
    mean_other = float(np.mean([flow[s - 1] for s in others])) if others else 0.0
    scores[loop.trigger] = net.branch(loop.trigger).r * mean_other
    return scores


def _flow_terms(net: Network, sol: PowerFlowSolution) -> np.ndarray:
    """(P^2 + Q^2) / V^2 per branch in per-unit; zeros for a diverged solution."""
    if not sol.converged:
        return np.zeros(len(net.branches))
    head = np.array([net.bus_index(br.from_bus) for br in net.branches])
    p = sol.p_branch / net.base_mva
    q = sol.q_branch / net.base_mva
    return (p * p + q * q) / sol.v_mag[head] ** 2


def elitism_filter(net: Network, loop: SectorLoop, sol: PowerFlowSolution,
                   cfg: ElitismConfig | None = None) -> list[int]:
    """Loop edges worth opening, highest estimated loss first (ties: lowest id).

    Keeps ``max(1, ceil(keep_ratio * len(loop)))`` edges.  A diverged base
    solution gives nothing to rank by, so the whole loop is returned.
    """
    cfg = cfg or ElitismConfig()
    if not sol.converged:
        # no flows to rank by: every loop edge stays a candidate
        return sorted(loop.loop_edges)
    scores = edge_scores(net, loop, sol)
    ranked = sorted(loop.loop_edges, key=lambda s: (-scores[s], s))
    return ranked[:cfg.keep_count(len(ranked))]


@dataclass(frozen=True)
class SearchConfig:
    """Search schedule.

    With ``rebase`` the sector loops are formed on the best tree found so far
    and sweeps over its open switches repeat until one yields no improvement.
    Without it, a single sweep is made against the initial tree only.
    """

    rebase: bool = True
    max_evaluations: int = 60

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")


@dataclass
class SearchResult:
    best_topology: Topology
    best_loss: float
    tabu: TabuList
    evaluations: int
    elapsed_seconds: float
    initial_open: list[int]
    solver_calls: int = 0
    sweeps: int = 0
    loops: list[tuple[SectorLoop, list[int]]] = field(default_factory=list)


def search(net: Network, priorities: Mapping[int, float],
           solver_cfg: SolverConfig | None = None,
           elitism_cfg: ElitismConfig | None = None,
           search_cfg: SearchConfig | None = None,
           evaluator: Evaluator = evaluate) -> SearchResult:
    """Run one search from the Prim tree induced by ``priorities``.

    The first sweep closes the initial tree's open switches in ascending id
    order.  Each loop is cut back to a radial topology by opening one of the
    edges kept by :func:`elitism_filter`; open sets already in the tabu list
    are skipped, so the solver runs at most once per topology.
    """
    solver_cfg = solver_cfg or SolverConfig()
    elitism_cfg = elitism_cfg or ElitismConfig()
    search_cfg = search_cfg or SearchConfig()
    t0 = time.perf_counter()
    calls = 0

    def run(topo: Topology) -> tuple[float, PowerFlowSolution]:
        nonlocal calls
        calls += 1
        return evaluator(net, topo, solver_cfg)

    tree0 = prim_mst(net, priorities)
    tabu = TabuList(net)
    loss0, sol0 = run(tree0)
    tabu.record(tree0, loss0)

    base, base_loss, base_sol = tree0, loss0, sol0
    triggers = sorted(tree0.open)
    loops = []
    sweeps = 0
    budget_left = lambda: len(tabu) < search_cfg.max_evaluations
    while budget_left():
        sweeps += 1
        improved = False
        for trigger in triggers:
            if trigger not in base.open or not budget_left():
                continue
            loop = fundamental_cycle(net, base, trigger)
            keep = elitism_filter(net, loop, base_sol, elitism_cfg)
            loops.append((loop, keep))
            origin = base
            for cand in keep:
                if cand == trigger or not budget_left():
                    continue
                topo = origin.with_swap(close=trigger, open_=cand)
                if topo in tabu:
                    continue
                loss, sol = run(topo)
                tabu.record(topo, loss)
                if search_cfg.rebase and loss < base_loss:
                    base, base_loss, base_sol = topo, loss, sol
                    improved = True
        if not improved:
            break
        triggers = sorted(base.open)

    best_topo, best_loss = tabu.best
    return SearchResult(
        best_topology=best_topo, best_loss=best_loss, tabu=tabu,
        evaluations=len(tabu), elapsed_seconds=time.perf_counter() - t0,
        initial_open=sorted(tree0.open), solver_calls=calls, sweeps=sweeps, loops=loops,
    )
