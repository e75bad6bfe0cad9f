import numpy as np
import pytest

from nfdilation import catalog
from nfdilation.contraction import make_contraction
from nfdilation.dilation import minimal_isometric_dilation, residual_part


def random_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def random_contraction(rng, n, slack=(1.0, 1.5)):
    """Random n x n matrix rescaled so that its norm is at most 1."""
    A = random_matrix(rng, n)
    return A / (np.linalg.norm(A, 2) * rng.uniform(*slack))


def random_unitary(rng, n):
    Q, R = np.linalg.qr(random_matrix(rng, n))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.fixture(scope="session")
def c11():
    """Weighted bilateral shift (window 64), its dilation and residual part."""
    entry = catalog.get("weighted-bilateral-64")
    W = entry.build()
    dil = minimal_isometric_dilation(W, entry.dilation_slots)
    res = residual_part(dil)
    return W, dil, res


@pytest.fixture(scope="session")
def scalar_half():
    return make_contraction(np.array([[0.5]]))


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record a PASS/FAIL line for an acceptance criterion and assert it."""
    lines = request.config.stash[_VERDICTS]

    def record(k, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
        print(line)
        lines.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
