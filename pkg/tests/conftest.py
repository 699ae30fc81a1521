import numpy as np
import pytest

from kds_lab import geometry, scenarios


@pytest.fixture(scope="session")
def sds():
    """Schwarzschild-de Sitter, Lambda = 3, M = 0.1, on the 64 x 16 grid."""
    return scenarios.make_setup(lam=3.0, mass=0.1, spin=0.0, n_r=64, n_theta=16)


@pytest.fixture(scope="session")
def kds():
    return scenarios.make_setup(lam=3.0, mass=0.1, spin=1e-3, n_r=32, n_theta=16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_points(setup, n, rng, margin=0.3):
    """Random (r, theta) samples inside the extended domain, away from the axis."""
    hz = setup.horizons
    r = rng.uniform(hz.r_inner_cap, hz.r_outer_cap, n)
    th = rng.uniform(margin, np.pi - margin, n)
    return r, th


def sym(x):
    return 0.5 * (x + np.swapaxes(x, -1, -2))


def random_sym_jet(rng, n, scale=1.0, second=True):
    """Random symmetric tensor jet with consistent index symmetries."""
    from kds_lab.tensors import SymTensorJet
    h = sym(rng.standard_normal((n, 4, 4)))
    dh = sym(rng.standard_normal((n, 4, 4, 4)))
    d2 = None
    if second:
        d2 = rng.standard_normal((n, 4, 4, 4, 4))
        d2 = sym(0.5 * (d2 + np.swapaxes(d2, 1, 2)))
    return SymTensorJet(scale * h, scale * dh, None if d2 is None else scale * d2)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
