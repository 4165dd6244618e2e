import numpy as np


def tau(dim, i, j):
    """|i><j| + |j><i| with 1-based levels."""
    A = np.zeros((dim, dim), dtype=complex)
    A[i - 1, j - 1] = A[j - 1, i - 1] = 1.0
    return A


def ket(dim, i):
    v = np.zeros(dim, dtype=complex)
    v[i - 1] = 1.0
    return v


def proj(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def random_hermitian(rng, n, scale=1.0):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (A + A.conj().T) / 2


def random_unitary(rng, n):
    Q, R = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def degenerate_hermitian(rng, n, n_levels):
    """Hermitian matrix with exactly degenerate integer eigenvalues."""
    levels = rng.integers(-3, 4, size=n_levels)
    eigs = rng.choice(levels, size=n).astype(float)
    U = random_unitary(rng, n)
    H = (U * eigs) @ U.conj().T
    return (H + H.conj().T) / 2


def random_density(rng, n, rank=None):
    rank = n if rank is None else rank
    X = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real
