"""Worked example models and their analytic oracles.

All models are dimensionless. Levels are numbered from 1 in the
docstrings and from 0 in array indices.

``three_level``
    Two levels driven at Rabi frequency ``omega``; level 2 is watched by a
    third level through a coupling ``K``.
``four_level``
    The same chain with a fourth level watching level 3 at ``K_prime``.
``lambda_cavity``
    Two Lambda atoms in a leaky single-mode cavity. The zero-eigenvalue
    space of the (non-Hermitian) coupling is decoherence free.
``decay_model``
    Level 1 decays through level 2 into a continuum (effective
    non-Hermitian term on level 2) while level 2 is Rabi-coupled to level 3.
    In SI units spontaneous emission has gamma ~ 1e9 1/s and
    tau_Z^2 ~ 1e-29 s^2, so the inverse-Zeno threshold 1/(tau_Z^2 gamma)
    is ~ 1e20 1/s; computations here use tau_Z = 1 instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, InvalidInputError
from .numkernel import dag, expm, frob_norm, is_hermitian, null_space
from .spaces import SpaceSpec, annihilator, basis_vector, embed, transition
from .zeno_core import (
    Trajectory,
    ZenoPartition,
    evolve_trajectory,
    kernel_partition,
    spectral_partition,
)

__all__ = [
    "ModelInstance",
    "DecayFit",
    "coupling_pair",
    "two_level",
    "three_level",
    "survival_analytic",
    "four_level",
    "restoration_deviation",
    "lambda_cavity",
    "reference_dark_basis",
    "dark_space",
    "dark_projector",
    "truncation_distance",
    "decay_model",
    "protection_thresholds",
    "fit_decay",
    "default_decay_window",
    "decay_trajectory",
    "decay_scan",
]


@dataclass(frozen=True)
class ModelInstance:
    """A system Hamiltonian plus a measurement coupling ``coupling * meas_H``."""

    name: str
    system_H: np.ndarray
    meas_H: np.ndarray
    coupling: float
    initial_state: np.ndarray
    space: SpaceSpec
    parameters: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        n = self.space.total_dim
        if self.system_H.shape != (n, n) or self.meas_H.shape != (n, n):
            raise ContractViolation(f"{self.name}: operators do not match the space dimension {n}")
        if self.initial_state.shape != (n,):
            raise ContractViolation(f"{self.name}: initial state has the wrong dimension")
        if abs(np.linalg.norm(self.initial_state) - 1.0) > 1e-12:
            raise ContractViolation(f"{self.name}: initial state is not normalized")

    @property
    def dim(self) -> int:
        return self.space.total_dim

    @property
    def hamiltonian(self) -> np.ndarray:
        """``system_H + coupling * meas_H``."""
        return self.system_H + self.coupling * self.meas_H

    @property
    def hermitian(self) -> bool:
        return is_hermitian(self.system_H) and is_hermitian(self.meas_H)

    def partition(self) -> ZenoPartition:
        """Sectors of ``meas_H``; only {kernel, rest} for a non-Hermitian ``meas_H``."""
        if is_hermitian(self.meas_H):
            return spectral_partition(self.meas_H)
        return kernel_partition(self.meas_H)


def coupling_pair(dim: int, i: int, j: int) -> np.ndarray:
    """``|i><j| + |j><i|`` with 1-based level numbers."""
    return transition(dim, i - 1, j - 1) + transition(dim, j - 1, i - 1)


def two_level(omega: float, K: float = 0.0) -> ModelInstance:
    """Rabi pair ``omega sigma_1`` watched through ``|2><2|``.

    The measurement sectors are the two levels themselves, which is the
    textbook setting for pulsed Zeno experiments.
    """
    H = omega * coupling_pair(2, 1, 2)
    meas = transition(2, 1, 1)
    return ModelInstance(
        "two-level", H, meas, float(K), basis_vector(2, 0), SpaceSpec.single(2, "level"),
        {"omega": float(omega), "K": float(K)},
    )


def three_level(omega: float, K: float) -> ModelInstance:
    H = omega * coupling_pair(3, 1, 2)
    meas = coupling_pair(3, 2, 3)
    return ModelInstance(
        "three-level", H, meas, float(K), basis_vector(3, 0), SpaceSpec.single(3, "level"),
        {"omega": float(omega), "K": float(K)},
    )


def survival_analytic(omega: float, K: float, t):
    """Closed-form survival of level 1 in :func:`three_level`.

    ``p(t) = (K^2 + omega^2 cos(K1 t))^2 / K1^4`` with ``K1 = sqrt(K^2 + omega^2)``;
    identically 1 when both rates vanish.
    """
    t = np.asarray(t, dtype=float)
    k1sq = K * K + omega * omega
    if k1sq == 0:
        return np.ones_like(t)
    k1 = np.sqrt(k1sq)
    return (K * K + omega * omega * np.cos(k1 * t)) ** 2 / k1sq**2


def four_level(omega: float, K: float, K_prime: float) -> ModelInstance:
    H = omega * coupling_pair(4, 1, 2) + K * coupling_pair(4, 2, 3)
    meas = coupling_pair(4, 3, 4)
    return ModelInstance(
        "four-level", H, meas, float(K_prime), basis_vector(4, 0), SpaceSpec.single(4, "level"),
        {"omega": float(omega), "K": float(K), "K_prime": float(K_prime)},
    )


def restoration_deviation(omega: float, K: float, K_prime: float, times) -> float:
    """``max_t | P_1(t) - cos^2(omega t) |`` for the exact four-level dynamics."""
    m = four_level(omega, K, K_prime)
    w, V = np.linalg.eigh(m.hamiltonian)
    amp0 = dag(V) @ m.initial_state
    times = np.asarray(times, dtype=float)
    amps = (V[0, :][None, :] * np.exp(-1j * np.outer(times, w))) @ amp0
    return float(np.max(np.abs(np.abs(amps) ** 2 - np.cos(omega * times) ** 2)))


# ---------------------------------------------------------------------------
# Lambda atoms in a cavity


def _cavity_space(n_max: int) -> SpaceSpec:
    return SpaceSpec((("photon", n_max + 1), ("atom1", 3), ("atom2", 3)))


def lambda_cavity(g: float, kappa: float, n_max: int = 3, omega: float = 0.0) -> ModelInstance:
    """Two Lambda atoms (ground states 0, 1; excited 2) in a lossy cavity.

    ``meas_H = i g sum_i (b |2><1|_i - h.c.) - i kappa b^dag b``. The system
    Hamiltonian is an optional weak drive ``omega (|0><1| + h.c.)`` on each
    atom's ground-state pair; the initial state is ``|0,0,0>``.
    """
    if n_max < 2:
        raise InvalidInputError("n_max must be at least 2")
    if not (g > 0 and kappa > 0):
        raise InvalidInputError("g and kappa must be positive")
    space = _cavity_space(n_max)
    b = embed(annihilator(n_max), space, "photon")
    meas = -1j * kappa * (dag(b) @ b)
    drive = np.zeros((space.total_dim,) * 2, dtype=np.complex128)
    for atom in ("atom1", "atom2"):
        up = embed(transition(3, 2, 1), space, atom)
        term = b @ up
        meas = meas + 1j * g * (term - dag(term))
        drive = drive + embed(transition(3, 0, 1) + transition(3, 1, 0), space, atom)
    psi0 = basis_vector(space.total_dim, space.index(photon=0, atom1=0, atom2=0))
    return ModelInstance(
        "cavity", omega * drive, meas, 1.0, psi0, space,
        {"g": float(g), "kappa": float(kappa), "n_max": float(n_max), "omega": float(omega)},
    )


def reference_dark_basis(n_max: int) -> np.ndarray:
    """Columns |000>, |001>, |010>, |011>, (|021> - |012>)/sqrt(2)."""
    space = _cavity_space(n_max)
    n = space.total_dim

    def ket(a1: int, a2: int) -> np.ndarray:
        return basis_vector(n, space.index(photon=0, atom1=a1, atom2=a2))

    cols = [ket(0, 0), ket(0, 1), ket(1, 0), ket(1, 1), (ket(2, 1) - ket(1, 2)) / np.sqrt(2)]
    return np.column_stack(cols)


def dark_space(model: ModelInstance, abs_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``model.meas_H``."""
    return null_space(model.meas_H, abs_tol)


def dark_projector(model: ModelInstance, abs_tol: float = 1e-9) -> np.ndarray:
    B = dark_space(model, abs_tol)
    return B @ dag(B)


def truncation_distance(g: float, kappa: float, n_max: int = 3) -> float:
    """Change of the dark-space projector when the Fock cutoff is raised by one.

    The smaller projector is padded with zeros for the extra photon level.
    """
    small = dark_projector(lambda_cavity(g, kappa, n_max))
    large = dark_projector(lambda_cavity(g, kappa, n_max + 1))
    n = small.shape[0]
    # photon is the slowest index, so n_max-space states are a leading block
    padded = np.zeros_like(large)
    padded[:n, :n] = small
    return frob_norm(padded - large)


# ---------------------------------------------------------------------------
# protection from decay


def decay_model(tau_z: float, gamma: float, K: float) -> ModelInstance:
    """Level 1 decaying via level 2 (width term ``-2i / (tau_z^2 gamma)``), level 2 watched by 3."""
    if not (tau_z > 0 and gamma > 0):
        raise InvalidInputError("tau_z and gamma must be positive")
    if K < 0:
        raise InvalidInputError("K must be nonnegative")
    H = coupling_pair(3, 1, 2) / tau_z
    H[1, 1] = -2j / (tau_z**2 * gamma)
    meas = coupling_pair(3, 2, 3)
    return ModelInstance(
        "decay", H, meas, float(K), basis_vector(3, 0), SpaceSpec.single(3, "level"),
        {"tau_z": float(tau_z), "gamma": float(gamma), "K": float(K)},
    )


def protection_thresholds(tau_z: float, gamma: float) -> dict[str, float]:
    """Couplings above which level 1 counts as protected.

    ``zeno`` is ``1/tau_z``; ``inverse_zeno`` is the stricter
    ``1/(tau_z^2 gamma)``, reported but not derived here.
    """
    return {"zeno": 1.0 / tau_z, "inverse_zeno": 1.0 / (tau_z**2 * gamma)}


@dataclass(frozen=True)
class DecayFit:
    gamma_eff: float
    window: tuple[float, float]
    residual: float


def default_decay_window(traj: Trajectory) -> tuple[float, float]:
    """``[5, 50] / gamma0`` with ``gamma0`` the trajectory-averaged rate.

    When that window holds fewer than 3 samples the fit falls back to
    ``[t_max / 8, t_max]``, which still skips the short-time quadratic region.
    """
    t, s = traj.times, traj.survival
    t_end = float(t[-1])
    gamma0 = -np.log(s[-1] / s[0]) / (t_end - t[0]) if s[-1] > 0 else np.inf
    if np.isfinite(gamma0) and gamma0 > 0:
        lo, hi = max(5.0 / gamma0, float(t[0])), min(50.0 / gamma0, t_end)
        if np.count_nonzero((t >= lo) & (t <= hi)) >= 3:
            return (lo, hi)
    return (t_end / 8.0, t_end)


def fit_decay(traj: Trajectory, window: tuple[float, float] | None = None) -> DecayFit:
    """Exponential rate from the slope of ``log(survival)`` over ``window``."""
    if window is None:
        window = default_decay_window(traj)
    lo, hi = window
    mask = (traj.times >= lo) & (traj.times <= hi)
    if np.count_nonzero(mask) < 3:
        raise InvalidInputError(f"decay window {window} holds fewer than 3 samples")
    t = traj.times[mask]
    s = traj.survival[mask]
    if np.any(~(s > 0)):
        raise InvalidInputError("survival must be positive inside the decay window")
    y = np.log(s)
    slope, intercept = np.polyfit(t, y, 1)
    resid = float(np.sqrt(np.mean((y - slope * t - intercept) ** 2)))
    return DecayFit(gamma_eff=float(-slope), window=(float(lo), float(hi)), residual=resid)


def decay_trajectory(model: ModelInstance, times) -> Trajectory:
    """Exact non-unitary evolution of ``model``; lost norm is kept, not renormalized."""
    H = model.hamiltonian
    return evolve_trajectory(lambda s: expm(-1j * H * s), times, model.initial_state, model.partition())


def decay_scan(tau_z: float, gamma: float, K_values, times, window=None) -> list[DecayFit]:
    """Fitted decay rate of level 1 for each coupling in ``K_values``."""
    return [fit_decay(decay_trajectory(decay_model(tau_z, gamma, K), times), window) for K in K_values]
