import numpy as np
import pytest
from hypothesis import HealthCheck, assume, settings
from hypothesis import strategies as st

from misreport.population import CELL_NAMES, STRUCTURAL_ZEROS, JointClassTable, Margins, margins
from misreport.power import DesignParams
from misreport.sensitivity import GammaModel, reduce

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BASELINE = Margins(I=0.1, D=0.2, N=0.35, A=0.35)
FREE_CELLS = tuple(c for c in CELL_NAMES if c not in STRUCTURAL_ZEROS)

# acceptance lines collected during the run and echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def params():
    return DesignParams(alpha=0.05, beta=0.2)


@st.composite
def tables(draw, max_weight=20):
    """Random valid joint tables built from small integer weights."""
    weights = draw(st.lists(st.integers(0, max_weight), min_size=len(FREE_CELLS), max_size=len(FREE_CELLS)))
    total = sum(weights)
    assume(total > 0)
    cells = {name: w / total for name, w in zip(FREE_CELLS, weights)}
    table = JointClassTable(**cells)
    m = margins(table)
    assume(m.N < 1 and m.A < 1)
    return table


@st.composite
def gamma_models(draw, max_gamma=2.0):
    """Random admissible (margins, Gamma) pairs."""
    w = draw(st.lists(st.integers(1, 50), min_size=4, max_size=4))
    total = sum(w)
    I, D, N = (x / total for x in w[:3])  # noqa: E741
    A = 1.0 - I - D - N
    U = draw(st.sampled_from([0.0, 0.05, 0.1, 0.2, 0.3]))
    O = draw(st.sampled_from([0.0, 0.05, 0.1, 0.2]))  # noqa: E741
    gamma = draw(st.floats(1.0, max_gamma))
    try:
        return GammaModel(gamma, Margins(I, D, N, A, U, O))
    except ValueError:
        assume(False)


@st.composite
def models_with_point(draw, max_gamma=2.0):
    """A model plus a random point of its feasible set (convex mix of vertices)."""
    model = draw(gamma_models(max_gamma))
    poly = reduce(model)
    verts = poly.vertices()
    raw = draw(st.lists(st.floats(0.0, 1.0), min_size=len(verts), max_size=len(verts)))
    weights = np.array(raw) + 1e-9
    y = (weights / weights.sum()) @ verts
    return model, poly.lift(y)
