from pathlib import Path

import pytest

from strongscale.logparse import load_log
from strongscale.runstore import load_records

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def ss10():
    return load_log(DATA / "ss10.log")


@pytest.fixture(scope="session")
def ss11():
    return load_log(DATA / "ss11.log")


@pytest.fixture(scope="session")
def table1():
    return {r.platform: r for r in load_records(DATA / "table1.csv")}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_passed = rep.passed
