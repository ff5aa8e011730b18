import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ltidetect.core import PredictedSequence
from ltidetect.lti import PredictionBuffer

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_buffer(rng: np.random.Generator, L: int, m: int, t: int | None = None,
                  scores=None, noise: float = 0.3):
    """A steady-state buffer at frame ``t`` (default ``2L``) with random forecasts.

    Returns ``(buffer, actuals)`` where ``actuals`` covers frames 0..t.
    """
    t = 2 * L if t is None else t
    actuals = rng.uniform(0, 1, (t + 1, m))
    buf = PredictionBuffer(L)
    for i in range(t - L - 1, t + 1):
        buf.push_actual(i, actuals[i])
    for j, i in enumerate(range(t - L, t)):
        # frames beyond t are never compared, so that part of the horizon is pure noise
        full = rng.uniform(0, 1, (L, m))
        n = min(L, t - i)
        full[:n] = np.clip(actuals[i + 1:i + 1 + n] + rng.normal(0, noise, (n, m)), 0, 1)
        s = 0.0 if scores is None else float(scores[j])
        buf.push_source(PredictedSequence(i, full), s)
    return buf, actuals


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ------------------------------------------------------------ acceptance report

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(capsys):
    """``verdict(label, ok, detail)`` prints one PASS/FAIL line and asserts ``ok``."""
    def record(label: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
