import numpy as np
import pytest

from dampnorm.model import DamperElement, SecondOrderModel, internal_damping_critical


def random_spd(rng, n, shift=1.0):
    A = rng.standard_normal((n, n))
    return A @ A.T + shift * n * np.eye(n)


def random_stable(rng, n):
    """Random real matrix shifted so its spectral abscissa is about -0.5."""
    A = rng.standard_normal((n, n))
    return A - (np.linalg.eigvals(A).real.max() + 0.5) * np.eye(n)


def random_model(rng, n, m=2, q=2, dampers=1):
    M = random_spd(rng, n)
    K = random_spd(rng, n)
    D = internal_damping_critical(M, K, 0.05)
    ds = [DamperElement(rng.standard_normal(n), float(rng.uniform(0.5, 3))) for _ in range(dampers)]
    return SecondOrderModel(M=M, K=K, D_int=D, dampers=ds, B2=rng.standard_normal((n, m)),
                            C1=rng.standard_normal((q, n)), C2=rng.standard_normal((q, n)))


def sdof(d, k=1.0, c1=1.0, c2=1.0, m=1.0):
    return SecondOrderModel(M=[[m]], K=[[k]], D_int=[[d]], B2=[[1.0]], C1=[[c1]], C2=[[c2]])


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
