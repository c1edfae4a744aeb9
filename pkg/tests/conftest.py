import numpy as np
import pytest

from cvqbm import _kernels_py, kernels

ACCEPTANCE_LINES = []


def _backends():
    names = ["python"]
    names.append(pytest.param("compiled", marks=pytest.mark.skipif(
        kernels.compiled_backend is None, reason="extension not built")))
    return names


@pytest.fixture(params=_backends())
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    impl = _kernels_py if request.param == "python" else kernels.compiled_backend
    for name in ("hermite_table", "betainc", "loss_tensor"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_pure(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_mixed(rng, d, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
