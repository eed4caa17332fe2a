"""Distribution-network reconfiguration by hybrid tabu search with elitist loop pruning."""
from .graphops import (SectorLoop, Topology, count_spanning_trees, enumerate_spanning_trees,
                       fundamental_cycle, is_radial, prim_mst)
from .hatsga import ElitismConfig, SearchConfig, SearchResult, TabuList, elitism_filter, search
from .netmodel import (BranchRecord, BusKind, BusRecord, Network, NetworkError, build_admittance,
                       load_network, parse_network, serialize_network)
from .oracle import OracleReport, exhaustive_min_loss, rank_of
from .powerflow import PowerFlowSolution, SolverConfig, eq1_loss, solve

__all__ = [
    "BranchRecord", "BusKind", "BusRecord", "ElitismConfig", "Network", "NetworkError",
    "OracleReport", "PowerFlowSolution", "SearchConfig", "SearchResult", "SectorLoop",
    "SolverConfig", "TabuList", "Topology", "build_admittance", "count_spanning_trees",
    "elitism_filter", "enumerate_spanning_trees", "eq1_loss", "exhaustive_min_loss",
    "fundamental_cycle", "is_radial", "load_network", "parse_network", "prim_mst",
    "rank_of", "search", "serialize_network", "solve",
]
