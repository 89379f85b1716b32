import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import settings

from expfamdiv import make_family
from expfamdiv.oracle import IntegrationScheme

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def expo():
    return make_family("Exponential")


@pytest.fixture
def scheme():
    return IntegrationScheme()


def load_schema(name):
    text = resources.files("expfamdiv").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def close(a, b, tol):
    return abs(float(a) - float(b)) <= tol


def spd(rng, d):
    a = rng.normal(size=(d, d))
    return np.eye(d) + 0.3 * (a @ a.T)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
