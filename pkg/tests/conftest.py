import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def oracle_bell(d: int, n: int, m: int) -> np.ndarray:
    """Bell vector built entry by entry, independent of the library."""
    v = np.zeros(d * d, dtype=complex)
    for j in range(d):
        v[j * d + (j + m) % d] += np.exp(2j * np.pi * j * n / d) / np.sqrt(d)
    return v


def oracle_partial_transpose(rho: np.ndarray, dims, side) -> np.ndarray:
    """Partial transpose by explicit multi-index loops."""
    side = set(side)
    out = np.zeros_like(rho)
    ranges = [range(x) for x in dims]
    idx = list(itertools.product(*ranges))

    def flat(t):
        k = 0
        for x, dim in zip(t, dims):
            k = k * dim + x
        return k

    for r in idx:
        for c in idx:
            r2 = tuple(c[q] if q in side else r[q] for q in range(len(dims)))
            c2 = tuple(r[q] if q in side else c[q] for q in range(len(dims)))
            out[flat(r2), flat(c2)] = rho[flat(r), flat(c)]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
