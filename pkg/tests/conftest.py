import numpy as np
import pytest

from conekit import linops


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2


def basis_proj(i: int, dim: int) -> np.ndarray:
    return linops.ket_projector(linops.basis_state(i, dim))


def sample_valid_single_pair(rng: np.random.Generator, dim: int):
    """Random (sigma, B) valid for the single-fixed-point construction:
    the top-eigenvector overlap condition plus the complete-positivity
    condition sigma - (1 - lambda_max) B >= 0.

    sigma itself is always a valid B (boundary overlap), so B is drawn
    uniformly on the segment from sigma toward a random density matrix,
    bisecting for the validity boundary when the far end is invalid.
    """
    sigma = random_density(rng, dim)
    lam, vecs = np.linalg.eigh(sigma)
    lam_max = float(lam[-1])
    v = vecs[:, -1]
    target = random_density(rng, dim)

    def valid(b):
        if float(np.real(v.conj() @ b @ v)) > lam_max + 1e-12:
            return False
        return np.linalg.eigvalsh(sigma - (1 - lam_max) * b).min() >= -1e-12

    if valid(target):
        alpha = rng.uniform(0.0, 1.0)
    else:
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = (lo + hi) / 2
            if valid((1 - mid) * sigma + mid * target):
                lo = mid
            else:
                hi = mid
        alpha = rng.uniform(0.0, lo)
    return sigma, (1 - alpha) * sigma + alpha * target
