import sys
from pathlib import Path

import pytest

from netreconf.netmodel import load_network, parse_network

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Priority vector (S1..S20) whose Prim tree opens S1,S4,S5,S8,S9,S12,S13.
# Found by drawing integer vectors in 1..1000 from default_rng(2024) until
# Prim produced that open set (trial 920), then frozen.
REF_PRIORITIES = dict(zip(range(1, 21), [
    650, 263, 499, 505, 912, 287, 313, 522, 695, 153,
    27, 965, 782, 438, 294, 74, 188, 366, 654, 215,
]))
REF_OPEN = (1, 4, 5, 8, 9, 12, 13)

TRIANGLE = """\
BASE_MVA 100
BUS 1 slack 1.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0
BUS 2 load  1.0 0.0 30.0 10.0 0.0 0.0 0.0 0.0 0.0
BUS 3 load  1.0 0.0 20.0 5.0 0.0 0.0 0.0 0.0 0.0
BRANCH 1 2 0.02 0.06 0.0 1.0 0 1 closed
BRANCH 2 3 0.03 0.09 0.0 1.0 0 1 closed
BRANCH 1 3 0.01 0.04 0.0 1.0 0 1 closed
"""


def two_bus(p_load=1.0, q_load=0.0, r=0.01, x=0.1) -> str:
    return (
        "BASE_MVA 100\n"
        "BUS 1 slack 1.0 0.0 0 0 0 0 0 0 0\n"
        f"BUS 2 load 1.0 0.0 {p_load} {q_load} 0 0 0 0 0\n"
        f"BRANCH 1 2 {r} {x} 0 1 0 1 closed\n"
    )


@pytest.fixture(scope="session")
def ieee14():
    return load_network(FIXTURES / "ieee14.net")


@pytest.fixture(scope="session")
def zero_load():
    return load_network(FIXTURES / "zero_load.net")


@pytest.fixture(scope="session")
def triangle():
    return parse_network(TRIANGLE)


@pytest.fixture(scope="session")
def ieee14_oracle(ieee14):
    from netreconf.oracle import exhaustive_min_loss
    return exhaustive_min_loss(ieee14)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
