import numpy as np
import pytest

from drgpb import MjlsModel
from drgpb.io import load_bundled_config


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion(request):
    """Record one PASS/FAIL line for the acceptance summary."""
    lines = request.config._acceptance_lines

    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        lines.append(line)
        print(line)
    return record


@pytest.fixture(scope="session")
def study_config():
    return load_bundled_config()


@pytest.fixture(scope="session")
def study_model(study_config):
    return study_config.model


def random_psd(rng, n, floor=0.0):
    M = rng.normal(size=(n, n))
    return M @ M.T / n + floor * np.eye(n)


def random_model(rng, n_theta=None, n_x=None, n_y=None):
    """A random, well-conditioned MJLS for property tests."""
    n_theta = n_theta or int(rng.integers(2, 4))
    n_x = n_x or int(rng.integers(1, 4))
    n_y = n_y or int(rng.integers(1, 3))
    A = []
    for _ in range(n_theta):
        M = rng.normal(size=(n_x, n_x))
        A.append(M / max(1e-9, np.abs(np.linalg.eigvals(M)).max()) * rng.uniform(0.3, 1.1))
    return MjlsModel(
        A=A,
        B=rng.normal(size=(n_theta, n_x, n_x)),
        C=rng.normal(size=(n_theta, n_y, n_x)),
        D=[np.eye(n_y)] * n_theta,
        W=random_psd(rng, n_x, 0.05),
        V=random_psd(rng, n_y, 0.1),
        Pi=rng.dirichlet(np.ones(n_theta), size=n_theta),
        p0_mode=rng.dirichlet(np.ones(n_theta)),
        x0_mean=rng.normal(size=n_x),
        X0=random_psd(rng, n_x, 0.1),
    )


def scalar_model(a=0.5, w=0.0, v=0.0, x0=1.0, X0=0.0, Pi=((1.0,),), p0=(1.0,), c=1.0, d=1.0):
    n = len(p0)
    return MjlsModel(A=[[[a]]] * n, B=[[[1.0]]] * n, C=[[[c]]] * n, D=[[[d]]] * n,
                     W=[[w]], V=[[v]], Pi=Pi, p0_mode=p0, x0_mean=[x0], X0=[[X0]])
