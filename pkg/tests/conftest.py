import sys

import numpy as np
import pytest
import structlog
from click.testing import CliRunner

import boxes
import quantum
from boxes import Behavior


@pytest.fixture(autouse=True)
def quiet_logging(mocker):
    """Auto-route ALL structlog output to stderr so reports on stdout stay clean."""
    mocker.patch("main.configure_logging")
    structlog.configure(
        processors=[structlog.processors.KeyValueRenderer()],
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
    yield
    structlog.reset_defaults()


@pytest.fixture(name="singlet")
def singlet_fixture():
    return quantum.singlet()


@pytest.fixture(name="tsirelson_measurements")
def tsirelson_measurements_fixture():
    first, second = quantum.TSIRELSON_ANGLES
    return [quantum.standard_measurements(first), quantum.standard_measurements(second)]


@pytest.fixture(name="tsirelson_behavior")
def tsirelson_behavior_fixture(singlet, tsirelson_measurements) -> Behavior:
    """Born behavior of the singlet at the angles reaching 2*sqrt(2)."""
    return boxes.from_quantum(singlet, tsirelson_measurements)


@pytest.fixture(name="pr")
def pr_fixture() -> Behavior:
    return boxes.pr_box()


@pytest.fixture(name="rng")
def rng_fixture():
    return np.random.default_rng(20240611)


@pytest.fixture(name="runner")
def runner_fixture():
    return CliRunner()
