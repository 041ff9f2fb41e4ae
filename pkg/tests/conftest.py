import numpy as np
import pytest
from hypothesis import strategies as st

from oracles import coprime_pairs

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_acceptance():
    def record(label, passed, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def small_schemes(draw, max_product=35, max_pq=6):
    r0, r1 = draw(st.sampled_from(coprime_pairs(max_product)))
    p = draw(st.integers(1, max_pq - 1))
    q = draw(st.integers(1, max_pq - p))
    return r0, r1, p, q
