import pytest

from gompertz_opt.hjb import solve_u_star
from gompertz_opt.model import CALIBRATED_EFFICACY, CALIBRATED_PARAMS, EfficacyModel, GridSpec


@pytest.fixture(scope="session")
def params():
    return CALIBRATED_PARAMS


@pytest.fixture(scope="session")
def efficacy():
    return CALIBRATED_EFFICACY


@pytest.fixture(scope="session")
def curve(params, efficacy):
    return solve_u_star(params, efficacy, GridSpec())


@pytest.fixture(scope="session")
def zero_curve(params):
    return solve_u_star(params, EfficacyModel.zero(), GridSpec(), method="shoot")


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
