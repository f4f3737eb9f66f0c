import hypothesis
import numpy as np
import pytest

from fhde.solver import ProblemSpec

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("fast", max_examples=10)
hypothesis.settings.register_profile("thorough", max_examples=500)

EXAMPLE_F = "tanh(t)*arctan(x+1)"
EXAMPLE_G = "t^2*exp(t)*abs(sin(x))*y/(1+y)"
EXAMPLE_H = "t^2*exp(t)"

ACCEPTANCE_LINES = []


def make_example(beta=1.0, grid_n=512, **kw):
    params = dict(name="tanh-arctan", t0=0.0, a=1.0, x0=0.0, alpha=0.5, beta=beta,
                  grid_n=grid_n, tol=1e-10, max_iter=50)
    params.update(kw)
    f = params.pop("f", EXAMPLE_F)
    g = params.pop("g", EXAMPLE_G)
    h = params.pop("h", EXAMPLE_H)
    return ProblemSpec.from_strings(f, g, h, **params)


@pytest.fixture
def example_spec():
    return make_example()


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
