import math

import numpy as np
import pytest

from ambientid.harness import ScenarioSpec, Setup, build_problem
from ambientid.model import GEN_TRUE, GenParams, MotorParams
from ambientid.simulate import simulate_gen_nonlinear, simulate_motor_nonlinear, sine_probe

PROBE_FREQS_HZ = (0.1, 0.3, 1.0, 2.0, 5.0)


def rel_err(a, b):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) / np.max(np.abs(np.asarray(b)))


def gen_probe(freq_hz, channel, theta=GEN_TRUE, Pm=0.5):
    p = GenParams(*theta)

    def sim(vm, vp, dt):
        return simulate_gen_nonlinear(p, Pm, vm, vp, dt)[0]

    return sine_probe(sim, (1.0, 0.0), channel, freq_hz, dt=2e-3, settle=80.0, periods=4)


def motor_probe(freq_hz, channel, p=MotorParams(), tau=None):
    """Nonlinear motor response to one d-q input channel.

    ``tau=None`` picks a filter with ``omega tau = 1e-3`` so the filtered
    derivative is indistinguishable from the ideal one at ``freq_hz``.
    """
    if tau is None:
        tau = 1e-3 / (2 * math.pi * freq_hz)
    dt = min(1e-3, 1.5 * tau)

    def sim(vm, vp, step):
        return simulate_motor_nonlinear(p, vm, vp, tau=tau, dt=step)[0]

    # v_q = V0 * dtheta at a zero steady phase
    return sine_probe(sim, (p.V0, 0.0), channel, freq_hz, dt=dt, settle=2.0, periods=2, scale=(1.0, p.V0))


@pytest.fixture(scope="session")
def gen_setup_small():
    return Setup(K=200)


@pytest.fixture(scope="session")
def snr10_problem(gen_setup_small):
    return build_problem(gen_setup_small, ScenarioSpec(0, 10.0, 0), theta_prior=GEN_TRUE * 1.3)


@pytest.fixture(scope="session")
def clean_problem(gen_setup_small):
    return build_problem(gen_setup_small, ScenarioSpec(0, None, 0), theta_prior=GEN_TRUE * 1.3)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion and assert it."""

    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
