import numpy as np
import pytest

import qloewner as ql


def random_stable_quadratic(rng, n, q_scale=0.05, spread=(-0.5, 0.8)):
    """Random minimal-ish quadratic system with stable linear part whose
    poles sit inside the sampled frequency band."""
    evals = -np.logspace(spread[0], spread[1], n)
    V = rng.standard_normal((n, n)) + np.eye(n)
    A = V @ np.diag(evals) @ np.linalg.inv(V)
    Q = ql.symmetrize_quadratic(q_scale * rng.standard_normal((n, n * n)))
    B = rng.standard_normal(n)
    C = rng.standard_normal(n)
    return ql.QuadraticSystem(A, Q, B, C)


def kernel_grids(n_h1=30, n_h2=10, n_h3=6, lo=-1.5, hi=1.2):
    ax1 = 2 * np.pi * np.logspace(lo - 0.5, hi + 0.3, n_h1)
    ax2 = 2 * np.pi * np.logspace(lo, hi, n_h2)
    ax3 = 2 * np.pi * np.logspace(lo, hi, n_h3)
    return {
        "h1": 1j * ax1,
        "h2": [(1j * a, 1j * b) for a in ax2 for b in ax2],
        "h3": [(1j * a, 1j * b, 1j * c) for a in ax3 for b in ax3 for c in ax3],
    }


@pytest.fixture(scope="session")
def lorenz_half():
    return ql.make_lorenz(rho=0.5)


@pytest.fixture(scope="session")
def lorenz20():
    return ql.make_lorenz(rho=20.0)


@pytest.fixture(scope="session")
def toy():
    return ql.make_quad_toy()


@pytest.fixture(scope="session")
def linear_intro():
    return ql.make_linear_intro()
