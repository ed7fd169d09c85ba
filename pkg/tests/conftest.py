import numpy as np
import pytest

from pdmeshfree import Material, build_families, generate_uniform_grid, perturb_then_refine


@pytest.fixture(scope="session")
def material():
    return Material(1e5, 0.3)


@pytest.fixture(scope="session")
def perturbed_cloud():
    """Seeded jittered grid, h = 0.1, sigma = 0.015, collar wide enough for n = 3."""
    base = generate_uniform_grid((-1.0, -1.0), (1.0, 1.0), 0.1, 0.45)
    return perturb_then_refine(base, 0.015, 0, seed=7)[0]


@pytest.fixture(scope="session")
def coarse_grid():
    g = generate_uniform_grid((-1.0, -1.0), (1.0, 1.0), 0.2, 0.9)
    return g, build_families(g, 3.5 * 0.2)


def random_neighborhood(rng, m, d=2, scale=1.0):
    xi = rng.uniform(-scale, scale, size=(m, d))
    r = np.linalg.norm(xi, axis=1)
    return xi[(r > 0.05 * scale) & (r <= scale)]


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record(criterion, passed, detail):
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
