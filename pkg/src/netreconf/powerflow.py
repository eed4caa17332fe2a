"""Polar Newton-Raphson AC power flow and the series-loss objective."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphops import Topology, is_connected
from .netmodel import BusKind, Network, build_admittance


class IslandingError(ValueError):
    """The topology leaves some bus without a path to the slack."""


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8  # per-unit mismatch
    max_iterations: int = 50
    flat_start: bool = True
    enforce_q_limits: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class PowerFlowSolution:
    v_mag: np.ndarray
    v_ang: np.ndarray
    p_branch: np.ndarray  # from-end MW, zero for open switches
    q_branch: np.ndarray
    p_branch_to: np.ndarray
    q_branch_to: np.ndarray
    p_gen: np.ndarray  # MW per bus; slack and PV reactive output solved
    q_gen: np.ndarray
    loss_total: float  # MW
    iterations: int
    converged: bool
    max_mismatch: float


def bus_injections(net: Network) -> np.ndarray:
    """Specified complex injections S = (Pg - Pd) + j(Qg - Qd), per-unit."""
    return np.array([complex(b.p_gen - b.p_load, b.q_gen - b.q_load) for b in net.buses]) / net.base_mva


def bus_types(net: Network) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index arrays (ref, pv, pq)."""
    kinds = [b.kind for b in net.buses]
    pick = lambda k: np.array([i for i, kk in enumerate(kinds) if kk is k], dtype=int)
    return pick(BusKind.SLACK), pick(BusKind.GENERATOR), pick(BusKind.LOAD)


def mismatch(Y: np.ndarray, V: np.ndarray, S_spec: np.ndarray, pv: np.ndarray, pq: np.ndarray) -> np.ndarray:
    """Stacked real mismatch [dP(pv, pq), dQ(pq)] of calculated minus specified power."""
    dS = V * np.conj(Y @ V) - S_spec
    return np.concatenate((dS.real[pv], dS.real[pq], dS.imag[pq]))


def jacobian(Y: np.ndarray, V: np.ndarray, pv: np.ndarray, pq: np.ndarray) -> np.ndarray:
    """Derivative of :func:`mismatch` with respect to [angle(pv, pq), |V|(pq)]."""
    I = Y @ V
    Vnorm = V / np.abs(V)
    dS_dVa = 1j * V[:, None] * np.conj(np.diag(I) - Y * V[None, :])
    dS_dVm = V[:, None] * np.conj(Y * Vnorm[None, :]) + np.diag(np.conj(I) * Vnorm)
    pvpq = np.concatenate((pv, pq))
    n1 = len(pvpq)
    J = np.empty((n1 + len(pq), n1 + len(pq)))
    J[:n1, :n1] = dS_dVa.real[pvpq][:, pvpq]
    J[:n1, n1:] = dS_dVm.real[pvpq][:, pq]
    J[n1:, :n1] = dS_dVa.imag[pq][:, pvpq]
    J[n1:, n1:] = dS_dVm.imag[pq][:, pq]
    return J


def _newton(Y, V, S_spec, pv, pq, cfg: SolverConfig):
    pvpq = np.concatenate((pv, pq))
    npvpq = len(pvpq)
    F = mismatch(Y, V, S_spec, pv, pq)
    norm = np.max(np.abs(F)) if F.size else 0.0
    it = 0
    while norm > cfg.tolerance and it < cfg.max_iterations:
        it += 1
        J = jacobian(Y, V, pv, pq)
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return V, it, False, np.inf
        Va = np.angle(V)
        Vm = np.abs(V)
        Va[pvpq] += dx[:npvpq]
        Vm[pq] += dx[npvpq:]
        V = Vm * np.exp(1j * Va)
        F = mismatch(Y, V, S_spec, pv, pq)
        norm = np.max(np.abs(F)) if F.size else 0.0
        if not np.isfinite(norm):
            return V, it, False, np.inf
    return V, it, bool(norm <= cfg.tolerance), float(norm)


def _branch_flows(net: Network, topo: Topology, V: np.ndarray):
    m = len(net.branches)
    Sf = np.zeros(m, dtype=complex)
    St = np.zeros(m, dtype=complex)
    for s in topo.closed:
        br = net.branch(s)
        i, j = net.endpoints(s)
        ys = 1.0 / complex(br.r, br.x)
        bc = 1j * br.b_half
        t = br.tap
        If = (ys + bc) / (t * t) * V[i] - ys / t * V[j]
        It = -ys / t * V[i] + (ys + bc) * V[j]
        Sf[s - 1] = V[i] * np.conj(If)
        St[s - 1] = V[j] * np.conj(It)
    return Sf * net.base_mva, St * net.base_mva


def solve(net: Network, topo: Topology, cfg: SolverConfig | None = None) -> PowerFlowSolution:
    """Newton-Raphson power flow on the closed branches of ``topo``.

    Non-convergence is reported through ``converged=False``; a topology that
    islands a bus raises :class:`IslandingError` before iterating.
    """
    cfg = cfg or SolverConfig()
    if not is_connected(net, topo.closed):
        raise IslandingError("topology islands at least one bus")

    Y = build_admittance(net, topo.closed)
    S_spec = bus_injections(net)
    ref, pv, pq = bus_types(net)
    gen_buses = pv.copy()
    q_min = np.array([b.q_min for b in net.buses]) / net.base_mva
    q_max = np.array([b.q_max for b in net.buses]) / net.base_mva
    q_load = np.array([b.q_load for b in net.buses]) / net.base_mva

    if cfg.flat_start:
        Vm = np.array([1.0 if b.kind is BusKind.LOAD else b.v_mag for b in net.buses])
        Va = np.zeros(net.n_bus)
    else:
        Vm = np.array([b.v_mag for b in net.buses])
        Va = np.array([b.v_ang for b in net.buses])
    # reference angle is always the slack's own
    Va[ref] = [net.buses[i].v_ang for i in ref]
    V = Vm * np.exp(1j * Va)

    total_it = 0
    while True:
        V, it, converged, norm = _newton(Y, V, S_spec, pv, pq, cfg)
        total_it += it
        if not (cfg.enforce_q_limits and converged and len(pv)):
            break
        # PV -> PQ switching at the violated limit, one pass per outer loop
        q_gen = (V * np.conj(Y @ V)).imag + q_load
        over = pv[q_gen[pv] > q_max[pv] + cfg.tolerance]
        under = pv[q_gen[pv] < q_min[pv] - cfg.tolerance]
        if not len(over) and not len(under):
            break
        S_spec = S_spec.copy()
        S_spec[over] = S_spec[over].real + 1j * (q_max[over] - q_load[over])
        S_spec[under] = S_spec[under].real + 1j * (q_min[under] - q_load[under])
        demoted = np.concatenate((over, under))
        pv = np.setdiff1d(pv, demoted)
        pq = np.sort(np.concatenate((pq, demoted)))

    Sf, St = _branch_flows(net, topo, V)
    S_calc = V * np.conj(Y @ V) * net.base_mva
    load = np.array([complex(b.p_load, b.q_load) for b in net.buses])
    gen = S_calc + load
    p_gen = np.array([b.p_gen for b in net.buses], dtype=float)
    q_gen = np.array([b.q_gen for b in net.buses], dtype=float)
    p_gen[ref] = gen.real[ref]
    q_gen[ref] = gen.imag[ref]
    q_gen[gen_buses] = gen.imag[gen_buses]
    return PowerFlowSolution(
        v_mag=np.abs(V), v_ang=np.angle(V),
        p_branch=Sf.real, q_branch=Sf.imag, p_branch_to=St.real, q_branch_to=St.imag,
        p_gen=p_gen, q_gen=q_gen,
        loss_total=float(np.sum(Sf.real + St.real)),
        iterations=total_it, converged=converged, max_mismatch=norm,
    )


def branch_loss_terms(net: Network, sol: PowerFlowSolution) -> np.ndarray:
    """Per-branch r * (P^2 + Q^2) / V^2 in per-unit, head-end flows and voltage."""
    r = np.array([br.r for br in net.branches])
    head = np.array([net.bus_index(br.from_bus) for br in net.branches])
    p = sol.p_branch / net.base_mva
    q = sol.q_branch / net.base_mva
    return r * (p * p + q * q) / sol.v_mag[head] ** 2


def eq1_loss(net: Network, topo: Topology, sol: PowerFlowSolution) -> float:
    """Series loss sum_i k_i r_i (P_i^2 + Q_i^2) / V_i^2 in MW (k_i = 1 iff closed)."""
    if not sol.converged:
        return np.inf
    k = np.array([s in topo.closed for s in net.switch_ids], dtype=float)
    return float(np.sum(k * branch_loss_terms(net, sol)) * net.base_mva)
