import numpy as np
import pytest

from gigaapi import GigaConfig, GigaGpu
from gigaapi.runtime import Runtime, uniform_specs

MiB = 1 << 20


@pytest.fixture
def rt():
    with Runtime(uniform_specs(2, 64 * MiB)) as runtime:
        yield runtime


@pytest.fixture
def rt3():
    with Runtime(uniform_specs(3, 64 * MiB)) as runtime:
        yield runtime


@pytest.fixture
def gpu():
    with GigaGpu(GigaConfig(device_count=2, memory_capacity=256 * MiB)) as g:
        yield g


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
