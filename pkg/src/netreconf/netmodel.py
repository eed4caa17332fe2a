"""Network data model: buses, switchable branches, file parsing and Y-bus assembly.

Loads and generation are kept in physical units (MW / MVAr); impedances,
line charging and bus shunts are per-unit on ``base_mva``.
"""
from __future__ import annotations

import enum
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class NetworkError(ValueError):
    """Invalid network data (bad syntax, broken invariant)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BusKind(enum.Enum):
    SLACK = "slack"
    GENERATOR = "gen"
    LOAD = "load"


@dataclass(frozen=True)
class BusRecord:
    id: int
    kind: BusKind
    v_mag: float
    v_ang: float  # radians
    p_load: float
    q_load: float
    p_gen: float
    q_gen: float
    q_min: float
    q_max: float
    shunt_b: float


@dataclass(frozen=True)
class BranchRecord:
    switch_id: int
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_half: float
    tap: float = 1.0
    limit: float = 0.0  # MVA, 0 = unrated
    priority: int = 1
    closed: bool = True


@dataclass(frozen=True)
class Network:
    buses: tuple[BusRecord, ...]
    branches: tuple[BranchRecord, ...]
    base_mva: float = 100.0
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {b.id: i for i, b in enumerate(self.buses)})

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def switch_ids(self) -> tuple[int, ...]:
        return tuple(br.switch_id for br in self.branches)

    @property
    def slack(self) -> BusRecord:
        return next(b for b in self.buses if b.kind is BusKind.SLACK)

    def bus_index(self, bus_id: int) -> int:
        """0-based row of ``bus_id`` in the bus table."""
        return self._index[bus_id]

    def branch(self, switch_id: int) -> BranchRecord:
        return self.branches[switch_id - 1]

    def endpoints(self, switch_id: int) -> tuple[int, int]:
        br = self.branch(switch_id)
        return self._index[br.from_bus], self._index[br.to_bus]

    def default_closed(self) -> frozenset[int]:
        return frozenset(br.switch_id for br in self.branches if br.closed)


def validate(net: Network) -> Network:
    """Check the structural invariants; return ``net`` unchanged on success."""
    ids = [b.id for b in net.buses]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise NetworkError(f"duplicate bus id {dup[0]}")
    n_slack = sum(b.kind is BusKind.SLACK for b in net.buses)
    if n_slack == 0:
        raise NetworkError("no slack bus")
    if n_slack > 1:
        raise NetworkError("multiple slack buses")
    for b in net.buses:
        if b.kind is not BusKind.LOAD and not b.v_mag > 0:
            raise NetworkError(f"bus {b.id}: voltage set point must be positive")
        if b.q_min > b.q_max:
            raise NetworkError(f"bus {b.id}: q_min > q_max")
    if net.switch_ids != tuple(range(1, len(net.branches) + 1)):
        raise NetworkError("switch ids must be dense 1..m in branch order")
    for br in net.branches:
        if br.from_bus not in net._index or br.to_bus not in net._index:
            raise NetworkError(f"S{br.switch_id}: unknown bus")
        if br.from_bus == br.to_bus:
            raise NetworkError(f"S{br.switch_id}: self loop")
        if br.r < 0 or (br.r == 0 and br.x == 0):
            raise NetworkError(f"S{br.switch_id}: invalid impedance")
        if br.tap <= 0:
            raise NetworkError(f"S{br.switch_id}: tap must be positive")
        if br.priority < 1:
            raise NetworkError(f"S{br.switch_id}: priority must be >= 1")
    if not _connected(net):
        raise NetworkError("network graph is disconnected")
    return net


def _connected(net: Network) -> bool:
    parent = list(range(net.n_bus))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for s in net.switch_ids:
        a, b = net.endpoints(s)
        parent[find(a)] = find(b)
    return len({find(i) for i in range(net.n_bus)}) == 1


_BUS_FIELDS = 12
_BRANCH_FIELDS = 10


def parse_network(text: str) -> Network:
    """Parse the line-oriented ``.net`` format.

    Raises NetworkError (carrying the offending line number where one applies).
    """
    base_mva = 100.0
    buses: list[BusRecord] = []
    branches: list[BranchRecord] = []
    seen: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        tag = tokens[0].upper()
        try:
            if tag == "BASE_MVA":
                if len(tokens) != 2:
                    raise ValueError("expected BASE_MVA <value>")
                base_mva = float(tokens[1])
                if not base_mva > 0:
                    raise ValueError("base MVA must be positive")
            elif tag == "BUS":
                if len(tokens) != _BUS_FIELDS:
                    raise ValueError(f"BUS needs {_BUS_FIELDS - 1} fields, got {len(tokens) - 1}")
                bus_id = int(tokens[1])
                if bus_id in seen:
                    raise ValueError(f"duplicate bus id {bus_id} (first on line {seen[bus_id]})")
                seen[bus_id] = lineno
                kind = BusKind(tokens[2].lower())
                v_mag, ang_deg, pl, ql, pg, qg, qmin, qmax, sh = map(float, tokens[3:])
                buses.append(BusRecord(bus_id, kind, v_mag, math.radians(ang_deg),
                                       pl, ql, pg, qg, qmin, qmax, sh))
            elif tag == "BRANCH":
                if len(tokens) != _BRANCH_FIELDS:
                    raise ValueError(f"BRANCH needs {_BRANCH_FIELDS - 1} fields, got {len(tokens) - 1}")
                state = tokens[9].lower()
                if state not in ("open", "closed"):
                    raise ValueError(f"branch state must be open|closed, got {tokens[9]!r}")
                branches.append(BranchRecord(
                    switch_id=len(branches) + 1,
                    from_bus=int(tokens[1]), to_bus=int(tokens[2]),
                    r=float(tokens[3]), x=float(tokens[4]), b_half=float(tokens[5]),
                    tap=float(tokens[6]), limit=float(tokens[7]),
                    priority=int(tokens[8]), closed=state == "closed",
                ))
            else:
                raise ValueError(f"unknown record {tokens[0]!r}")
        except ValueError as exc:
            raise NetworkError(str(exc), line=lineno) from None
    if not buses:
        raise NetworkError("no buses defined")
    return validate(Network(tuple(buses), tuple(branches), base_mva))


def load_network(path: str | Path) -> Network:
    return parse_network(Path(path).read_text(encoding="utf-8"))


def _degrees_exact(rad: float) -> float:
    # smallest-step nudge so that radians(deg) reproduces rad bit-for-bit
    deg = math.degrees(rad)
    for direction in (math.inf, -math.inf):
        d = deg
        for _ in range(4):
            if math.radians(d) == rad:
                return d
            d = math.nextafter(d, direction)
    return deg


def serialize_network(net: Network) -> str:
    lines = [f"BASE_MVA {net.base_mva!r}"]
    for b in net.buses:
        vals = (b.v_mag, _degrees_exact(b.v_ang), b.p_load, b.q_load, b.p_gen, b.q_gen,
                b.q_min, b.q_max, b.shunt_b)
        lines.append(f"BUS {b.id} {b.kind.value} " + " ".join(repr(v) for v in vals))
    for br in net.branches:
        vals = (br.r, br.x, br.b_half, br.tap, br.limit)
        lines.append(f"BRANCH {br.from_bus} {br.to_bus} " + " ".join(repr(v) for v in vals)
                     + f" {br.priority} {'closed' if br.closed else 'open'}")
    return "\n".join(lines) + "\n"


def branch_stamp(net: Network, switch_id: int) -> tuple[int, int, np.ndarray]:
    """2x2 admittance block of one branch (pi model, tap on the from side).

    Returns ``(i, j, block)`` with ``block = [[Yff, Yft], [Ytf, Ytt]]``.
    """
    br = net.branch(switch_id)
    i, j = net.endpoints(switch_id)
    ys = 1.0 / complex(br.r, br.x)
    bc = 1j * br.b_half
    t = br.tap
    block = np.array([[(ys + bc) / (t * t), -ys / t],
                      [-ys / t, ys + bc]], dtype=complex)
    return i, j, block


def build_admittance(net: Network, closed: Iterable[int]) -> np.ndarray:
    """Dense complex Y-bus for the given closed switches, bus shunts included."""
    n = net.n_bus
    Y = np.zeros((n, n), dtype=complex)
    for s in sorted(closed):
        i, j, blk = branch_stamp(net, s)
        Y[i, i] += blk[0, 0]
        Y[i, j] += blk[0, 1]
        Y[j, i] += blk[1, 0]
        Y[j, j] += blk[1, 1]
    Y[np.diag_indices(n)] += 1j * np.array([b.shunt_b for b in net.buses])
    return Y
