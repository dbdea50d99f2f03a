import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from transitnet.graph import from_edges
from transitnet.oracle import SynthConfig, generate, write_synthetic

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthConfig(n_stations=120, n_passengers=200, days=14, seed=3))


@pytest.fixture(scope="session")
def synth_files(tmp_path_factory, small_synth):
    out = tmp_path_factory.mktemp("synth")
    return write_synthetic(small_synth, out)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def digraph(*edges, nodes=()):
    return from_edges(edges, nodes=nodes)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
