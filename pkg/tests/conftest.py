import numpy as np
import pytest

from sensorqc.series import TimeSeries


@pytest.fixture
def rng():
    return np.random.default_rng(20161018)


def minute_series(values, start="2016-10-18T00:00:00", sensor_id="NH4_T3"):
    return TimeSeries.regular(values, start=start, sensor_id=sensor_id)


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
