import math

import pytest

from multirenorm import boxmap, maps, nest, tuner

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}

SADDLE_NODE_B = (-1 - math.sqrt(8)) / 2  # period-3 saddle-node of the quadratic family


@pytest.fixture(scope="session")
def b_feigenbaum():
    return tuner.accumulation_parameter(12)[0]


@pytest.fixture(scope="session")
def feigenbaum_map(b_feigenbaum):
    return maps.build_quadratic_family([b_feigenbaum])


@pytest.fixture(scope="session")
def feigenbaum_nest(feigenbaum_map):
    return nest.principal_nest(boxmap.extend(feigenbaum_map), 12)


@pytest.fixture(scope="session")
def doubling_bs():
    return tuner.doubling_parameters(8)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
