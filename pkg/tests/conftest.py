import numpy as np
import pytest

from gfsc import kernels

BACKENDS = ["python"] + (["cython"] if kernels.compiled_backend is not None else [])

_ACCEPTANCE = []


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    mod = kernels.python_backend if request.param == "python" else kernels.compiled_backend
    for name in ("lowpass_csr", "hungarian", "lloyd_step"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def random_affinity(gen, n, density=1.0):
    A = gen.random((n, n))
    if density < 1.0:
        A = A * (gen.random((n, n)) < density)
    W = np.triu(A, 1)
    return W + W.T


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = {True: "PASS", False: "FAIL", None: "INFO"}[passed]
        terminalreporter.write_line(f"[{status}] {number:>2}. {name}: {detail}")
