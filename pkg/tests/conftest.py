import math

import pytest

from nanotrap.params import AMU, DeviceParams, IonParams, bundled_config, load_config

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def bundled():
    """(DeviceParams, IonParams) from the bundled CNT config."""
    device, ion, _ = load_config(bundled_config())
    return device, ion


@pytest.fixture
def device(bundled):
    return bundled[0]


@pytest.fixture
def ion(bundled):
    return bundled[1]


@pytest.fixture
def ion40():
    return IonParams(mass=40 * AMU)


def make_device(**kw) -> DeviceParams:
    base = dict(
        r0=2e-9,
        half_length=250e-9,
        gap=100e-9,
        height=1e-6,
        youngs_modulus=1e12,
        volumetric_density=2200.0,
        drive_voltage=5.0,
        drive_freq=2 * math.pi * 3e9,
    )
    base.update(kw)
    return DeviceParams(**base)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
