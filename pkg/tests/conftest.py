import math

import pytest

from bandcontrol import (ProblemSpec, make_linear_holding, make_quadratic_holding,
                         solve_impulse, solve_singular)

# closed forms for h = |x|, lambda = mu = 1, k = ell = 1/2
R1_B1 = math.sqrt(1.0 - math.exp(-1.0))
R1_SING_D = math.log(1.0 - R1_B1)
R1_SING_U = math.log(1.0 + R1_B1)
R1_SING_GAMMA = R1_SING_U + 0.5


def r1(K=1.0, L=1.0, mu=1.0, mode="impulse"):
    return ProblemSpec(mu, 2.0, K, 0.5, L, 0.5, make_linear_holding(1.0, 1.0, 0.0), mode)


def quadratic():
    return ProblemSpec(1.0, 2.0, 1.0, 0.5, 1.0, 0.5, make_quadratic_holding(1.0, 0.0))


def shifted_linear():
    return ProblemSpec(0.5, 1.0, 2.0, 0.3, 1.0, 0.7, make_linear_holding(2.0, 1.0, 1.0))


INSTANCES = {"r1": r1, "quadratic": quadratic, "shifted_linear": shifted_linear}


@pytest.fixture(scope="session")
def solved():
    """Impulse optima for the three reference instances, solved once."""
    out = {}
    for name, make in INSTANCES.items():
        spec = make()
        out[name] = (spec, solve_impulse(spec))
    return out


@pytest.fixture(scope="session")
def r1_singular():
    spec = r1(K=0.0, L=0.0, mode="singular")
    return spec, solve_singular(spec)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
