import numpy as np
import pytest

from qalab.ising import parse_instance, random_instance

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def kron_hamiltonian(inst, gamma, pairwise=False):
    """Independent oracle: H built from Pauli matrices with np.kron.

    Site i is the i-th least significant tensor factor, matching the bit
    convention of the package (bit value 0 <-> sigma^z = +1).
    """
    n = inst.n_sites
    eye = np.eye(2)
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])

    def op(mats):
        out = np.ones((1, 1))
        for site in reversed(range(n)):
            out = np.kron(out, mats.get(site, eye))
        return out

    h = np.zeros((2**n, 2**n))
    for t in inst.terms:
        h -= t.coefficient * op({s: sz for s in t.sites})
    for i in range(n):
        h -= gamma * op({i: sx})
    if pairwise:
        for i in range(n):
            for j in range(i + 1, n):
                h -= gamma * op({i: sx, j: sx})
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def single_field():
    return parse_instance("n 1\nterm 1.0 0\n")


@pytest.fixture
def ferro2():
    return parse_instance("n 2\nterm 1.0 0 1\n")


@pytest.fixture
def random3(rng):
    return random_instance(3, rng, orders=(1, 2, 3))


@pytest.fixture
def acceptance_log():
    def record(criterion, ok, detail):
        _ACCEPTANCE.append((criterion, bool(ok), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(_ACCEPTANCE, key=lambda r: int(r[0].split()[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}")
