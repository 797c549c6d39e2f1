from pathlib import Path

import numpy as np
import pytest

from mitmono.assembly import assemble_geometry
from mitmono.geometry import ResistivityMap, Scenario, build_grid, default_coils

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def random_scenario(rng, n=None, n_coils=None, eta_range=(1e-6, 1e-5)):
    n = int(rng.integers(3, 9)) if n is None else n
    n_coils = int(rng.integers(1, 5)) if n_coils is None else n_coils
    grid = build_grid(n, n, 0.01, 0.001)
    lo, hi = np.log(eta_range[0]), np.log(eta_range[1])
    eta = ResistivityMap(np.exp(rng.uniform(lo, hi, grid.n_cells)))
    lift = grid.h * rng.uniform(0.5, 2.0)
    return Scenario(grid, eta, default_coils(grid, n_coils, lift=lift))


def random_spd(rng, n, cond=1e3):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.geomspace(1.0, cond, n)
    rng.shuffle(w)
    return (Q * w) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def fixture_scenarios():
    """Twenty seeded random scenarios with their assembled operators."""
    rng = np.random.default_rng(1234)
    out = []
    for _ in range(20):
        sc = random_scenario(rng)
        geo = assemble_geometry(sc)
        out.append((sc, geo, geo.operators(sc.eta)))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
