"""Dense complex linear algebra used by the rest of the package.

Operators are plain ``numpy`` arrays of shape ``(n, n)`` and dtype
``complex128``. Human-readable basis labels live on
:class:`zeno_subspaces.spaces.SpaceSpec`, not on the arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, EmptySpaceError, InvalidInputError

__all__ = [
    "HERMITIAN_TOL",
    "Eigensystem",
    "EigenvalueClusters",
    "as_operator",
    "dag",
    "commutator",
    "is_hermitian",
    "hermitian_eig",
    "expm",
    "expm_pade13",
    "expm_spectral",
    "cluster_eigenvalues",
    "null_space",
    "op_norm",
    "frob_norm",
]

HERMITIAN_TOL = 1e-12


def as_operator(A, name: str = "operator") -> np.ndarray:
    """Coerce ``A`` to a square complex128 array with finite entries."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractViolation(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has NaN or infinite entries")
    return A


def dag(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def is_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    """True when ``max |A - A^dag| <= tol * ||A||_F``."""
    A = np.asarray(A)
    if A.size == 0:
        return True
    scale = np.linalg.norm(A)
    return bool(np.max(np.abs(A - A.conj().T)) <= tol * scale)


@dataclass(frozen=True)
class Eigensystem:
    """Eigenvalues with matching eigenvector columns ``vectors[:, k]``."""

    values: np.ndarray
    vectors: np.ndarray
    input_was_hermitian: bool

    def __len__(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        V = self.vectors
        return (V * self.values) @ V.conj().T


def hermitian_eig(A) -> Eigensystem:
    """Eigendecomposition of a Hermitian operator.

    Eigenvalues are real and ascending, eigenvectors orthonormal.

    Raises
    ------
    EmptySpaceError
        If ``A`` is ``0 x 0``.
    ContractViolation
        If ``A`` is not Hermitian to ``HERMITIAN_TOL`` relative accuracy.
    """
    A = as_operator(A)
    if A.shape[0] == 0:
        raise EmptySpaceError("cannot diagonalize an operator on a zero-dimensional space")
    if not is_hermitian(A):
        raise ContractViolation("hermitian_eig requires a Hermitian operator")
    # eigh reads one triangle only; symmetrize so both halves contribute
    w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    return Eigensystem(values=w, vectors=V, input_was_hermitian=True)


def expm_spectral(A) -> np.ndarray:
    """exp(A) for Hermitian or anti-Hermitian ``A`` via diagonalization."""
    A = as_operator(A)
    if is_hermitian(A):
        es = hermitian_eig(A)
        return (es.vectors * np.exp(es.values)) @ es.vectors.conj().T
    B = -1j * A
    if is_hermitian(B):
        es = hermitian_eig(B)
        return (es.vectors * np.exp(1j * es.values)) @ es.vectors.conj().T
    raise ContractViolation("spectral expm needs a Hermitian or anti-Hermitian generator")


# Higham (2005), degree-13 diagonal Pade coefficients and scaling threshold.
_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


def expm_pade13(A) -> np.ndarray:
    """General matrix exponential by scaling and squaring with a [13/13] Pade approximant."""
    A = as_operator(A)
    n = A.shape[0]
    if n == 0:
        return A.copy()
    norm1 = np.linalg.norm(A, 1)
    s = 0
    if norm1 > _THETA13:
        s = int(np.ceil(np.log2(norm1 / _THETA13)))
    A = A / (2.0**s)

    b = _PADE13
    ident = np.eye(n, dtype=np.complex128)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def expm(A, method: str = "auto") -> np.ndarray:
    """Matrix exponential.

    ``method="auto"`` diagonalizes Hermitian and anti-Hermitian input (so
    ``exp(-iHt)`` comes out unitary to round-off) and falls back to
    :func:`expm_pade13` otherwise. ``"pade"`` and ``"spectral"`` force a path.
    """
    A = as_operator(A)
    if method == "pade":
        return expm_pade13(A)
    if method == "spectral":
        return expm_spectral(A)
    if method != "auto":
        raise InvalidInputError(f"unknown expm method {method!r}")
    if A.shape[0] == 0:
        return A.copy()
    if not np.any(A):
        return np.eye(A.shape[0], dtype=np.complex128)
    if is_hermitian(A) or is_hermitian(-1j * A):
        return expm_spectral(A)
    return expm_pade13(A)


@dataclass(frozen=True)
class EigenvalueClusters:
    groups: tuple[tuple[int, ...], ...]
    representatives: tuple[float, ...]
    tolerance_used: float

    def __len__(self) -> int:
        return len(self.groups)


def cluster_eigenvalues(values, rel_tol: float = 1e-8) -> EigenvalueClusters:
    """Single-link clustering of sorted real eigenvalues.

    Consecutive values closer than ``rel_tol * max(1, spread)`` share a
    group. Representatives are group means.
    """
    if rel_tol <= 0:
        raise InvalidInputError("rel_tol must be positive")
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0:
        return EigenvalueClusters((), (), 0.0)
    if np.any(np.diff(vals) < 0):
        raise ContractViolation("cluster_eigenvalues expects ascending values")
    tol = rel_tol * max(1.0, float(vals[-1] - vals[0]))
    groups: list[list[int]] = [[0]]
    for k in range(1, vals.size):
        if vals[k] - vals[k - 1] <= tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    reps = tuple(float(np.mean(vals[g])) for g in groups)
    return EigenvalueClusters(tuple(tuple(g) for g in groups), reps, tol)


def null_space(A, abs_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal kernel basis of ``A`` as the columns of the returned array.

    A singular value counts as zero when it is at most ``abs_tol`` times the
    largest one, so the decision does not depend on the overall scale of ``A``.
    """
    A = as_operator(A)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    _, sv, Vh = np.linalg.svd(A)
    smax = sv[0] if sv.size else 0.0
    small = sv <= abs_tol * smax
    return Vh[small].conj().T


def op_norm(A) -> float:
    """Spectral norm (largest singular value)."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def frob_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A)))
