import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def interior_random(rng, n, scale=1.0):
    w = rng.standard_normal((n, n)) * scale
    w[0, :] = w[-1, :] = w[:, 0] = w[:, -1] = 0.0
    return w


_ACCEPTANCE_KEY = "_pdeaccel_acceptance"


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Per-criterion (label, ok, detail) records, summarized at the end of the run."""
    log = getattr(request.config, _ACCEPTANCE_KEY, None)
    if log is None:
        log = {}
        setattr(request.config, _ACCEPTANCE_KEY, log)
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, _ACCEPTANCE_KEY, None)
    if not log:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for cid in sorted(log):
        items = log[cid]
        ok = all(i[1] for i in items)
        failed = [f"{label}: {detail}" for label, good, detail in items if not good]
        summary = "; ".join(failed) if failed else "; ".join(f"{label}: {detail}" for label, _, detail in items)
        tr.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {summary}")
