import warnings

import numpy as np
import pytest

import dmamodel as d
from dmamodel.model import bundled_scenario_path, read_config

# One line per acceptance criterion, filled in by test_acceptance.py.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def validation():
    return d.validation_scenario()


@pytest.fixture(scope="session")
def validation_adm(validation):
    return d.build_admittances(validation)


@pytest.fixture(scope="session")
def validation_solution(validation, validation_adm):
    return d.solve(validation_adm, d.Excitation.equal_power(2, 1.0), Y_0=validation.Y_0)


def validation_config():
    return read_config(bundled_scenario_path("validation"))


def scenario_from(config):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", d.GeometryWarning)
        return d.build_scenario(config)


@pytest.fixture
def config():
    return validation_config()


@pytest.fixture(scope="session")
def with_users():
    cfg = validation_config()
    cfg["users"] = {"positions": [[0.06, 1.0, 0.03], [0.02, 2.5, -0.4]]}
    return scenario_from(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
