import functools

import numpy as np
import pytest

from cftqec.codespace import make_codespace
from cftqec.models import ising_states

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def ising_code(n, labels=("I", "epsilon")):
    return make_codespace(ising_states(n, labels), labels)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(rng, dim, rank=None):
    rank = rank or dim
    A = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def _criterion_key(line):
    num = line[1:].split()[0].rstrip(":")
    return (int(''.join(c for c in num if c.isdigit()) or 0), line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=_criterion_key):
            terminalreporter.write_line(line)
