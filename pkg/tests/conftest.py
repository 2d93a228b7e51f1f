import numpy as np
import pytest

from npblockade.hilbert import CompositeSpace, boson
from npblockade.liouvillian import DensityMatrix


def random_density(space, rng, rank=None):
    """Random full- or low-rank density matrix on ``space``."""
    D = space.dim
    k = rank or D
    X = rng.normal(size=(D, k)) + 1j * rng.normal(size=(D, k))
    rho = X @ X.conj().T
    return DensityMatrix(space, rho / np.trace(rho).real)


def coherent_ket(dim, alpha):
    k = np.arange(dim)
    logfact = np.array([np.sum(np.log(np.arange(1, j + 1))) for j in k])
    amp = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * logfact) * alpha ** k
    return amp.astype(complex)


def coherent_dm(dim, alpha, normalize=True):
    psi = coherent_ket(dim, alpha)
    if normalize:
        psi = psi / np.linalg.norm(psi)
    return DensityMatrix(CompositeSpace([boson(dim)]), np.outer(psi, psi.conj()))


def fock_dm(dim, m):
    rho = np.zeros((dim, dim), complex)
    rho[m, m] = 1.0
    return DensityMatrix(CompositeSpace([boson(dim)]), rho)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
