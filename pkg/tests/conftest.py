import numpy as np
import pytest

from shadowtrace.geometry import make_circle, make_ellipse, make_fourier

ACCEPTANCE_LINES = []


def convex_fourier_curve(seed=7, degree=4, amplitude=0.15):
    """Circle plus a small random smooth perturbation, checked to stay strictly convex."""
    rng = np.random.default_rng(seed)
    k = np.arange(2, degree + 1)
    scale = amplitude / k ** 2
    xa = [1.0] + list(rng.normal(0, 1, k.size) * scale)
    xb = [0.0] + list(rng.normal(0, 1, k.size) * scale)
    ya = [0.0] + list(rng.normal(0, 1, k.size) * scale)
    yb = [1.0] + list(rng.normal(0, 1, k.size) * scale)
    curve = make_fourier((0.0, xa, xb), (0.0, ya, yb))
    assert curve.metrics.convex and curve.metrics.rotation_index == 1
    return curve


@pytest.fixture(scope="session")
def circle():
    return make_circle()


@pytest.fixture(scope="session")
def ellipse2():
    return make_ellipse(2.0)


@pytest.fixture(scope="session")
def figure_eight():
    return make_fourier((0.0, [0.0, 0.0], [0.0, 1.0]), (0.0, [0.0], [1.0]))


@pytest.fixture(scope="session")
def convex_curve():
    return convex_fourier_curve()


@pytest.fixture
def acceptance():
    def record(number, title, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

