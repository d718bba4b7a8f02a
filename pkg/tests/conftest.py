import math
import os

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from foursqueeze.symplectic import SqueezeRotParams

settings.register_profile("default", max_examples=int(os.environ.get("HYPOTHESIS_EXAMPLES", 60)), deadline=None)
settings.load_profile("default")

angle = st.floats(-math.pi, math.pi, allow_nan=False)
small_angle = st.floats(-1.2, 1.2, allow_nan=False)


@st.composite
def params_strategy(draw, r_max=1.0, tau_max=1.0):
    r1 = draw(st.floats(0.0, r_max))
    r2 = draw(st.floats(0.0, r_max))
    tau_abs = draw(st.floats(0.0, tau_max))
    tau_arg = draw(angle)
    p = SqueezeRotParams.from_squeezing(
        r1, r2,
        theta3=draw(angle), theta4=draw(small_angle),
        phi3=draw(angle), phi4=draw(small_angle), phi5=draw(small_angle), phi6=draw(small_angle),
    )
    return p.with_tau(tau_abs * complex(math.cos(tau_arg), math.sin(tau_arg)))


def random_params(rng, r_max=1.0, tau_max=0.3):
    r1, r2 = rng.uniform(0, r_max, 2)
    tau = rng.uniform(0, tau_max) * np.exp(1j * rng.uniform(-math.pi, math.pi))
    return SqueezeRotParams.from_squeezing(
        r1, r2,
        theta3=rng.uniform(-math.pi, math.pi), theta4=rng.uniform(-1, 1),
        phi3=rng.uniform(-math.pi, math.pi), phi4=rng.uniform(-1, 1),
        phi5=rng.uniform(-1, 1), phi6=rng.uniform(-1, 1),
    ).with_tau(tau)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def loglog_slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(np.abs(ys)), 1)[0])


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(str(k).rstrip("*ab")), str(k))):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {str(key):>3}: {'PASS' if ok else 'FAIL'}  {detail}")
