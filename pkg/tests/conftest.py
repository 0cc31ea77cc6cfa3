import numpy as np
import pytest
from hypothesis import strategies as st

from tridentsim.sparse import CsrMatrix

ACCEPTANCE_LINES: list[str] = []


def random_csr(rng: np.random.Generator, nrows: int, ncols: int, density: float, signed: bool = False) -> CsrMatrix:
    mask = rng.random((nrows, ncols)) < density
    vals = rng.random((nrows, ncols)) + 0.5
    if signed:
        vals *= rng.choice([-1.0, 1.0], size=(nrows, ncols))
    return CsrMatrix.from_dense(np.where(mask, vals, 0.0))


@st.composite
def csr_matrices(draw, max_dim=12, nrows=None, ncols=None, signed=True):
    nrows = draw(st.integers(0, max_dim)) if nrows is None else nrows
    ncols = draw(st.integers(0, max_dim)) if ncols is None else ncols
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.sampled_from([0.0, 0.1, 0.3, 0.7, 1.0]))
    return random_csr(np.random.default_rng(seed), nrows, ncols, density, signed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_log():
    def log(criterion: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
