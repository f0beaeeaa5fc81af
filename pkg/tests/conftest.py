import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from optolev import presets  # noqa: E402
from optolev.derivation import LinearizedModel, linearize  # noqa: E402

TWO_PI = 2 * math.pi


@pytest.fixture(scope="session")
def hybrid_model():
    return linearize(presets.hybridisation_setup())


@pytest.fixture(scope="session")
def squeezing_model():
    return linearize(presets.squeezing_setup())


@pytest.fixture(scope="session")
def ground_model():
    return linearize(presets.ground_state_setup())


def make_model(wx, wy, wz, gx, gy, gz, gxy, kappa, detuning, gamma=TWO_PI * 10.0,
               nb=(100.0, 100.0, 100.0), phase=0.0):
    g = [complex(v) for v in (gx, gy, gz)]
    g[2] = g[2] * complex(math.cos(phase), math.sin(phase))
    return LinearizedModel(omega=(wx, wy, wz), g=tuple(g), g_direct=(gxy, 0.0, 0.0),
                           kappa=kappa, gamma=gamma, detuning_eff=detuning, bath_occupancy=nb)


@st.composite
def stable_models(draw):
    """Random three-mode models in the weak-to-moderate coupling regime."""
    wz = TWO_PI * draw(st.floats(30e3, 90e3))
    wy = TWO_PI * draw(st.floats(100e3, 250e3))
    wx = wy * draw(st.floats(1.05, 1.5))
    kappa = TWO_PI * draw(st.floats(50e3, 500e3))
    detuning = -wx * draw(st.floats(0.5, 2.5))
    scale = draw(st.floats(0.01, 0.15)) * wy
    gx = scale * draw(st.floats(-1, 1))
    gy = scale * draw(st.floats(-1, 1))
    gz = scale * draw(st.floats(-1, 1))
    gxy = scale * draw(st.floats(-0.2, 0.2))
    phase = draw(st.sampled_from([0.0, math.pi / 2]))
    nb = tuple(draw(st.floats(0.0, 1e3)) for _ in range(3))
    gamma = TWO_PI * draw(st.floats(1.0, 1e3))
    return make_model(wx, wy, wz, gx, gy, gz, gxy, kappa, detuning, gamma, nb, phase)


def stable(model):
    return model.is_stable()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
