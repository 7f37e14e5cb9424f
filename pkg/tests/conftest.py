import numpy as np
import pytest

from dplab import ShapePotential

ACCEPTANCE_LINES: list[str] = []


def well():
    return ShapePotential.from_pieces([(-1.0, 1.0, [-1.0])], label="well")


def half_psi():
    return ShapePotential.from_pieces([(-1.0, 1.0, [0.5])], label="psi")


def odd_phi():
    return ShapePotential.from_pieces([(-1.0, 1.0, [0.0, -1.5])], label="odd")


def random_piecewise_constant(rng: np.random.Generator, max_pieces: int = 4, amp: float = 1.0) -> ShapePotential:
    n = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.uniform(-1.0, 1.0, n - 1))
    edges = np.concatenate([[-1.0], cuts, [1.0]])
    pieces = [(a, b, [float(rng.uniform(-amp, amp))]) for a, b in zip(edges[:-1], edges[1:]) if b - a > 1e-6]
    return ShapePotential.from_pieces(pieces)


@pytest.fixture
def phi_well():
    return well()


@pytest.fixture
def psi_half():
    return half_psi()


@pytest.fixture
def phi_odd():
    return odd_phi()


@pytest.fixture
def zero():
    return ShapePotential.zero()


@pytest.fixture
def record_acceptance():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"ACCEPTANCE {number} {'PASS' if passed else 'FAIL'}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
