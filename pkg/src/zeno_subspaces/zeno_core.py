"""Zeno dynamics: pulsed projective measurements and the strong-coupling limit.

Two routes to the same sector structure are implemented side by side:

* pulsed: ``rho -> P(U(t/N) P)...`` with the measurement superoperator
  ``P rho = sum_n P_n rho P_n``;
* continuous: ``exp(-i (H + K H_meas) t)`` and its ``K -> oo`` limit
  ``exp(-i (H_diag + K H_meas) t)`` with ``H_diag = sum_n P_n H P_n``.

States are passed either as kets (1-d arrays) or density matrices (2-d).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolation, InvalidInputError
from .numkernel import (
    as_operator,
    cluster_eigenvalues,
    commutator,
    dag,
    expm,
    frob_norm,
    hermitian_eig,
    is_hermitian,
    null_space,
    op_norm,
)

logger = logging.getLogger(__name__)

PARTITION_TOL = 1e-10
DENSITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class ZenoPartition:
    """Complete family of mutually orthogonal projectors.

    ``eigenvalues[n]`` is the measurement eigenvalue of sector ``n``; it is
    ``nan`` for a sector that is only defined as a complement (see
    :func:`kernel_partition`). Sectors are ordered by ascending eigenvalue.
    """

    projectors: tuple[np.ndarray, ...]
    eigenvalues: tuple[float, ...]
    source: np.ndarray | None = None

    def __post_init__(self):
        if len(self.projectors) != len(self.eigenvalues):
            raise ContractViolation("one eigenvalue per projector is required")
        if not self.projectors:
            raise ContractViolation("a partition needs at least one projector")

    def __len__(self) -> int:
        return len(self.projectors)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def ranks(self) -> list[int]:
        return [int(round(np.trace(P).real)) for P in self.projectors]

    def defects(self) -> dict[str, float]:
        """Largest violations of idempotence, orthogonality and completeness."""
        Ps = self.projectors
        idem = max(frob_norm(P @ P - P) for P in Ps)
        orth = max(
            (frob_norm(Ps[i] @ Ps[j]) for i in range(len(Ps)) for j in range(len(Ps)) if i != j),
            default=0.0,
        )
        comp = frob_norm(sum(Ps) - np.eye(self.dim))
        return {"idempotence": idem, "orthogonality": orth, "completeness": comp}

    def check(self, tol: float = PARTITION_TOL) -> "ZenoPartition":
        bad = {k: v for k, v in self.defects().items() if v > tol}
        if bad:
            raise ContractViolation(f"projectors do not form a partition: {bad}")
        return self

    @classmethod
    def from_subspaces(cls, bases: Sequence, eigenvalues: Sequence[float] | None = None) -> "ZenoPartition":
        """Build projectors from orthonormal bases (columns) of each sector."""
        projs = []
        for B in bases:
            B = np.asarray(B, dtype=np.complex128)
            if B.ndim == 1:
                B = B[:, None]
            projs.append(B @ dag(B))
        if eigenvalues is None:
            eigenvalues = [float(n) for n in range(len(projs))]
        return cls(tuple(projs), tuple(float(e) for e in eigenvalues)).check()

    @classmethod
    def trivial(cls, dim: int) -> "ZenoPartition":
        return cls((np.eye(dim, dtype=np.complex128),), (0.0,))


def spectral_partition(H_meas, rel_tol: float = 1e-8) -> ZenoPartition:
    """One projector per distinct eigenvalue of a Hermitian measurement operator.

    Non-Hermitian operators are rejected; use :func:`kernel_partition` for
    those, which only resolves the zero-eigenvalue sector.
    """
    H_meas = as_operator(H_meas, "H_meas")
    if not is_hermitian(H_meas):
        raise ContractViolation(
            "spectral_partition needs a Hermitian H_meas; "
            "for dissipative operators use kernel_partition (eta = 0 sector only)"
        )
    es = hermitian_eig(H_meas)
    clusters = cluster_eigenvalues(es.values, rel_tol)
    projs = []
    for group in clusters.groups:
        V = es.vectors[:, list(group)]
        projs.append(V @ dag(V))
    return ZenoPartition(tuple(projs), clusters.representatives, source=H_meas).check()


def kernel_partition(A, abs_tol: float = 1e-9) -> ZenoPartition:
    """Two-sector partition {ker A, its orthogonal complement}.

    The kernel sector carries eigenvalue 0, the complement ``nan``.
    """
    A = as_operator(A)
    kernel = null_space(A, abs_tol)
    P0 = kernel @ dag(kernel)
    rest = np.eye(A.shape[0], dtype=np.complex128) - P0
    if kernel.shape[1] == 0:
        return ZenoPartition((rest,), (float("nan"),), source=A)
    if kernel.shape[1] == A.shape[0]:
        return ZenoPartition((P0,), (0.0,), source=A)
    return ZenoPartition((P0, rest), (0.0, float("nan")), source=A).check()


def _require_dim(op: np.ndarray, partition: ZenoPartition, what: str) -> None:
    if op.shape[0] != partition.dim:
        raise ContractViolation(f"{what} has dim {op.shape[0]}, partition has dim {partition.dim}")


def diag_part(H, partition: ZenoPartition) -> np.ndarray:
    """``sum_n P_n H P_n``, the part of ``H`` that acts inside the sectors."""
    H = as_operator(H, "H")
    _require_dim(H, partition, "H")
    return sum(P @ H @ P for P in partition.projectors)


# ---------------------------------------------------------------------------
# states


def density_matrix(state) -> np.ndarray:
    """Return ``|psi><psi|`` for a ket, or a copy of a density matrix."""
    state = np.asarray(state, dtype=np.complex128)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return as_operator(state, "density matrix").copy()


def check_density(rho, tol: float = DENSITY_TOL) -> np.ndarray:
    """Validate hermiticity, unit trace and positivity of ``rho``."""
    rho = as_operator(rho, "density matrix")
    if np.max(np.abs(rho - dag(rho)), initial=0.0) > tol:
        raise ContractViolation("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ContractViolation(f"density matrix trace is {tr}, not 1")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + dag(rho)))[0]
    if lam_min < -tol:
        raise ContractViolation(f"density matrix has negative eigenvalue {lam_min}")
    return rho


def _split_state(state) -> tuple[np.ndarray, np.ndarray | None]:
    arr = np.asarray(state, dtype=np.complex128)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj()), arr
    return as_operator(arr, "density matrix"), None


def prepare(rho, partition: ZenoPartition) -> np.ndarray:
    """The non-selective measurement ``sum_n P_n rho P_n``."""
    rho = density_matrix(rho)
    _require_dim(rho, partition, "state")
    return sum(P @ rho @ P for P in partition.projectors)


def sector_probabilities(rho, partition: ZenoPartition) -> np.ndarray:
    rho = density_matrix(rho)
    _require_dim(rho, partition, "state")
    return np.array([np.trace(rho @ P).real for P in partition.projectors])


def coherence_norm(rho, partition: ZenoPartition) -> float:
    """Frobenius norm of the inter-sector part of ``rho``."""
    rho = density_matrix(rho)
    return frob_norm(rho - prepare(rho, partition))


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    sector_probs: np.ndarray  # shape (len(times), len(partition))
    survival: np.ndarray  # nan when the initial state is mixed
    coherence_norm: np.ndarray
    total_norm: np.ndarray

    def __post_init__(self):
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ContractViolation("trajectory times must be strictly ascending")

    def __len__(self) -> int:
        return self.times.size

    @property
    def n_sectors(self) -> int:
        return self.sector_probs.shape[1]


class _Recorder:
    def __init__(self, partition: ZenoPartition, psi0: np.ndarray | None):
        self.partition = partition
        self.psi0 = psi0
        self.rows: list[tuple] = []

    def record(self, t: float, rho: np.ndarray, survival: float | None = None) -> None:
        if survival is not None:
            surv = survival
        elif self.psi0 is None:
            surv = float("nan")
        else:
            surv = float(np.real(self.psi0.conj() @ rho @ self.psi0))
        self.rows.append(
            (
                t,
                sector_probabilities(rho, self.partition),
                surv,
                coherence_norm(rho, self.partition),
                float(np.trace(rho).real),
            )
        )

    def trajectory(self) -> Trajectory:
        t, probs, surv, coh, tot = zip(*self.rows)
        return Trajectory(
            times=np.array(t, dtype=float),
            sector_probs=np.array(probs, dtype=float).reshape(len(t), len(self.partition)),
            survival=np.array(surv, dtype=float),
            coherence_norm=np.array(coh, dtype=float),
            total_norm=np.array(tot, dtype=float),
        )


def uniform_times(t_max: float, samples: int = 200) -> np.ndarray:
    if samples < 2:
        raise InvalidInputError("at least two samples are needed")
    if not t_max > 0:
        raise InvalidInputError("t_max must be positive")
    return np.linspace(0.0, t_max, samples)


def evolve_trajectory(
    propagator: Callable[[float], np.ndarray],
    times,
    state,
    partition: ZenoPartition,
    reference=None,
) -> Trajectory:
    """Sample ``U(t) rho0 U(t)^dag`` on ``times`` for a caller-supplied propagator.

    Survival is measured against ``reference`` if given, else against
    ``state`` when it is a ket.
    """
    rho0, psi0 = _split_state(state)
    if reference is not None:
        psi0 = np.asarray(reference, dtype=np.complex128)
    rec = _Recorder(partition, psi0)
    for t in np.asarray(times, dtype=float):
        U = propagator(float(t))
        rec.record(float(t), U @ rho0 @ dag(U))
    return rec.trajectory()


# ---------------------------------------------------------------------------
# pulsed measurements


def _check_time(t: float) -> None:
    if t < 0:
        raise InvalidInputError(f"evolution time must be nonnegative, got {t}")


def _home_sector(psi0: np.ndarray | None, partition: ZenoPartition) -> int | None:
    if psi0 is None:
        return None
    probs = sector_probabilities(psi0 / np.linalg.norm(psi0), partition)
    home = int(np.argmax(probs))
    return home if abs(probs[home] - 1.0) <= PARTITION_TOL else None


def pulsed_evolve(H, partition: ZenoPartition, state, t: float, N: int) -> tuple[np.ndarray, Trajectory]:
    """Measure, then ``N`` times evolve for ``t/N`` and measure again.

    Returns ``(P U(t/N))^N P rho0`` (total evolution time ``t``) and the
    trajectory recorded at each of the ``N + 1`` measurements.

    For a ket lying in a single sector ``n`` the trajectory's ``survival``
    is the selective probability ``||(P_n U(t/N))^k psi0||^2`` that every
    measurement so far found sector ``n``. Otherwise it is ``nan``.
    """
    if N < 1:
        raise InvalidInputError("N must be at least 1")
    _check_time(t)
    H = as_operator(H, "H")
    _require_dim(H, partition, "H")
    rho0, psi0 = _split_state(state)
    home = _home_sector(psi0, partition)
    branch = None if home is None else partition.projectors[home] @ psi0
    nan = float("nan")

    def branch_prob() -> float:
        return nan if branch is None else float(np.vdot(branch, branch).real)

    rec = _Recorder(partition, psi0)
    rho = prepare(rho0, partition)
    rec.record(0.0, rho, branch_prob())
    if t == 0:
        return rho, rec.trajectory()
    dt = t / N
    U = expm(-1j * H * dt)
    Ud = dag(U)
    for k in range(1, N + 1):
        rho = prepare(U @ rho @ Ud, partition)
        if branch is not None:
            branch = partition.projectors[home] @ (U @ branch)
        rec.record(k * dt, rho, branch_prob())
    return rho, rec.trajectory()


def zeno_product(H, partition: ZenoPartition, state, t: float, n_measurements: int) -> np.ndarray:
    """``n_measurements`` measurements spaced ``t/n_measurements`` apart, preparation included.

    With ``n = n_measurements`` this is ``P (U(t/n) P)^(n-1) rho0``: the
    free evolution only spans ``(n-1) t / n``. ``n = 1`` is plain
    preparation.
    """
    if n_measurements < 1:
        raise InvalidInputError("n_measurements must be at least 1")
    _check_time(t)
    if n_measurements == 1 or t == 0:
        return prepare(state, partition)
    n = n_measurements
    rho, _ = pulsed_evolve(H, partition, state, t * (n - 1) / n, n - 1)
    return rho


def pulsed_limit(H, partition: ZenoPartition, state, t: float) -> np.ndarray:
    """``N -> oo`` limit of :func:`pulsed_evolve`: evolve the prepared state under ``H_diag``."""
    _check_time(t)
    rho = prepare(state, partition)
    if t == 0:
        return rho
    U = expm(-1j * diag_part(H, partition) * t)
    return U @ rho @ dag(U)


def pulsed_limit_trajectory(H, partition: ZenoPartition, state, times) -> Trajectory:
    Hd = diag_part(H, partition)
    psi0 = _split_state(state)[1]
    rho0 = prepare(state, partition)
    return evolve_trajectory(lambda s: expm(-1j * Hd * s), times, rho0, partition, reference=psi0)


def pulsed_trajectory(H, partition: ZenoPartition, state, times, N: int) -> Trajectory:
    """For every ``t`` in ``times``, the end point of an ``N``-pulse run of length ``t``."""
    rho0, psi0 = _split_state(state)
    rec = _Recorder(partition, psi0)
    for t in np.asarray(times, dtype=float):
        rho, run = pulsed_evolve(H, partition, state, float(t), N)
        rec.record(float(t), rho, float(run.survival[-1]))
    return rec.trajectory()


# ---------------------------------------------------------------------------
# continuous measurement


def coupled_hamiltonian(H, H_meas, K: float) -> np.ndarray:
    H = as_operator(H, "H")
    H_meas = as_operator(H_meas, "H_meas")
    if H.shape != H_meas.shape:
        raise ContractViolation(f"H {H.shape} and H_meas {H_meas.shape} differ in shape")
    return H + K * H_meas


def continuous_propagator(H, H_meas, K: float, t: float) -> np.ndarray:
    """``exp(-i (H + K H_meas) t)``."""
    if K < 0:
        raise InvalidInputError("coupling K must be nonnegative")
    HK = coupled_hamiltonian(H, H_meas, K)
    if t == 0:
        return np.eye(HK.shape[0], dtype=np.complex128)
    return expm(-1j * HK * t)


def _apply(U: np.ndarray, state) -> np.ndarray:
    state = np.asarray(state, dtype=np.complex128)
    if state.ndim == 1:
        return U @ state
    return U @ state @ dag(U)


def continuous_evolve(H, H_meas, K: float, t: float, state) -> np.ndarray:
    """Evolve a ket or density matrix under ``H + K H_meas`` for time ``t``."""
    return _apply(continuous_propagator(H, H_meas, K, t), state)


def zeno_limit_generator(H, H_meas, K: float, partition: ZenoPartition | None = None) -> np.ndarray:
    """``H_diag + K H_meas``, the generator of the strong-coupling limit."""
    if partition is None:
        partition = spectral_partition(H_meas)
    return diag_part(H, partition) + K * as_operator(H_meas, "H_meas")


def zeno_limit_evolve(H, H_meas, K: float, t: float, partition: ZenoPartition | None = None) -> np.ndarray:
    """Limit propagator ``exp(-i (H_diag + K H_meas) t)``; commutes with every ``P_n``."""
    G = zeno_limit_generator(H, H_meas, K, partition)
    if t == 0:
        return np.eye(G.shape[0], dtype=np.complex128)
    return expm(-1j * G * t)


def continuous_trajectory(H, H_meas, K: float, times, state, partition: ZenoPartition) -> Trajectory:
    HK = coupled_hamiltonian(H, H_meas, K)
    return evolve_trajectory(lambda s: expm(-1j * HK * s), times, state, partition)


def limit_trajectory(H, H_meas, K: float, times, state, partition: ZenoPartition | None = None) -> Trajectory:
    if partition is None:
        partition = spectral_partition(H_meas)
    G = zeno_limit_generator(H, H_meas, K, partition)
    return evolve_trajectory(lambda s: expm(-1j * G * s), times, state, partition)


def superselection_defect(U, partition: ZenoPartition) -> float:
    """``max_n ||[U, P_n]||_F``."""
    return max(frob_norm(commutator(U, P)) for P in partition.projectors)


def leakage(H, H_meas, K: float, t_grid, psi0, partition: ZenoPartition) -> float:
    """Largest probability found outside the initial sector over ``t_grid``."""
    psi0 = np.asarray(psi0, dtype=np.complex128)
    psi0 = psi0 / np.linalg.norm(psi0)
    p0 = sector_probabilities(psi0, partition)
    home = int(np.argmax(p0))
    if abs(p0[home] - 1.0) > PARTITION_TOL:
        raise ContractViolation(f"initial state is spread over several sectors: {p0}")
    P = partition.projectors[home]
    HK = coupled_hamiltonian(H, H_meas, K)
    worst = 0.0
    for t in np.asarray(t_grid, dtype=float):
        psi = expm(-1j * HK * t) @ psi0
        worst = max(worst, 1.0 - float(np.real(psi.conj() @ P @ psi)))
    return worst


def interaction_picture_propagator(H, H_meas, K: float, t: float, steps: int = 1000) -> np.ndarray:
    """Integrate ``i dU/dt = K H_meas^I(t) U`` with ``H_meas^I(t) = e^{iHt} H_meas e^{-iHt}``.

    Fourth-order Magnus product with two Gauss-Legendre nodes per step.
    """
    H = as_operator(H, "H")
    H_meas = as_operator(H_meas, "H_meas")
    if not is_hermitian(H):
        raise ContractViolation("interaction picture needs a Hermitian H")
    es = hermitian_eig(H)
    V, w = es.vectors, es.values
    Hm_eig = dag(V) @ H_meas @ V

    def A(s: float) -> np.ndarray:
        phase = np.exp(1j * w * s)
        return -1j * K * (V @ (phase[:, None] * Hm_eig * phase.conj()[None, :]) @ dag(V))

    h = t / steps
    c1, c2 = 0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6
    U = np.eye(H.shape[0], dtype=np.complex128)
    for k in range(steps):
        t0 = k * h
        A1, A2 = A(t0 + c1 * h), A(t0 + c2 * h)
        omega = 0.5 * h * (A1 + A2) + (np.sqrt(3) / 12) * h * h * commutator(A2, A1)
        U = expm(omega) @ U
    return U


# ---------------------------------------------------------------------------
# convergence scans


@dataclass(frozen=True)
class ConvergenceReport:
    parameter_name: str
    parameter_values: np.ndarray
    errors: np.ndarray
    fitted_order: float
    fit_residual: float

    @property
    def ratios(self) -> np.ndarray:
        """Error ratio between consecutive parameter values."""
        return self.errors[1:] / self.errors[:-1]

    @property
    def monotone_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))


def fit_power_law(values, errors) -> tuple[float, float]:
    """Least-squares slope of ``log(error)`` against ``log(value)``.

    Returns ``(slope, rms_residual)``, the residual measured in natural-log
    units.
    """
    x = np.log(np.asarray(values, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(np.sqrt(np.mean(resid**2)))


def convergence_scan(
    error_fn: Callable[[float], float],
    values: Sequence[float],
    parameter_name: str,
    max_workers: int | None = None,
) -> ConvergenceReport:
    """Evaluate ``error_fn`` on a geometric grid and fit its power-law order.

    Points are independent; with ``max_workers`` they run in a thread pool
    and are collected in grid order.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size < 4:
        raise InvalidInputError("a convergence fit needs at least 4 parameter values")
    if np.any(vals <= 0) or np.any(np.diff(vals) <= 0):
        raise InvalidInputError("parameter values must be positive and ascending")
    r = vals[1:] / vals[:-1]
    if np.max(np.abs(r - r[0])) > 1e-9 * r[0]:
        raise InvalidInputError("parameter values must be geometrically spaced")
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            errs = list(pool.map(error_fn, vals))
    else:
        errs = [error_fn(v) for v in vals]
    errs = np.asarray(errs, dtype=float)
    if np.any(errs < 0) or not np.all(np.isfinite(errs)):
        raise ContractViolation(f"error metric returned invalid values {errs}")
    if np.any(errs == 0):
        raise ContractViolation("zero error at some point; a log-log fit is undefined")
    slope, resid = fit_power_law(vals, errs)
    logger.debug("scan %s: errors=%s slope=%.4f residual=%.4f", parameter_name, errs, slope, resid)
    return ConvergenceReport(parameter_name, vals, errs, slope, resid)


def coupling_error(H, H_meas, t: float, partition: ZenoPartition | None = None) -> Callable[[float], float]:
    """``K -> ||U_K(t) U_lim(t)^dag - I||``, full phases included."""
    if partition is None:
        partition = spectral_partition(H_meas)
    Hd = diag_part(H, partition)
    H = as_operator(H, "H")
    H_meas = as_operator(H_meas, "H_meas")
    ident = np.eye(H.shape[0])

    def err(K: float) -> float:
        UK = expm(-1j * (H + K * H_meas) * t)
        Ul = expm(-1j * (Hd + K * H_meas) * t)
        return op_norm(UK @ dag(Ul) - ident)

    return err


def pulsed_error(H, partition: ZenoPartition, state, t: float) -> Callable[[float], float]:
    """``N -> ||rho_N(t) - rho_lim(t)||_F``."""
    target = pulsed_limit(H, partition, state, t)

    def err(N: float) -> float:
        rho, _ = pulsed_evolve(H, partition, state, t, int(round(N)))
        return frob_norm(rho - target)

    return err


def pulsed_survival_deficit(H, partition: ZenoPartition, psi0, t: float) -> Callable[[float], float]:
    """``N -> 1 - survival`` with the selective survival of :func:`pulsed_evolve`."""
    psi0 = np.asarray(psi0, dtype=np.complex128)

    def err(N: float) -> float:
        _, run = pulsed_evolve(H, partition, psi0, t, int(round(N)))
        return 1.0 - float(run.survival[-1])

    return err
