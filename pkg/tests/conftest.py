import numpy as np
import pytest

from fddmc.kinetics import LigandKinetics
from fddmc.params import SystemConfig, derive_all
from fddmc.spectral import PsdModel


@pytest.fixture(scope="session")
def cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def derived(cfg):
    return derive_all(cfg)


@pytest.fixture(scope="session")
def model(cfg, derived):
    return PsdModel.from_config(cfg, derived)


@pytest.fixture(scope="session")
def kinetics(cfg):
    return LigandKinetics.from_config(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
