"""Quantum Zeno subspaces under pulsed and continuous measurement."""

from .errors import ContractViolation, EmptySpaceError, InvalidInputError, ZenoError
from .numkernel import (
    Eigensystem,
    EigenvalueClusters,
    cluster_eigenvalues,
    expm,
    frob_norm,
    hermitian_eig,
    null_space,
    op_norm,
)
from .spaces import SpaceSpec, annihilator, embed, kron, transition
from .zeno_core import (
    ConvergenceReport,
    Trajectory,
    ZenoPartition,
    coherence_norm,
    continuous_evolve,
    convergence_scan,
    diag_part,
    kernel_partition,
    leakage,
    prepare,
    pulsed_evolve,
    pulsed_limit,
    sector_probabilities,
    spectral_partition,
    zeno_limit_evolve,
)
from .models import (
    DecayFit,
    ModelInstance,
    dark_space,
    decay_model,
    fit_decay,
    four_level,
    lambda_cavity,
    survival_analytic,
    three_level,
    two_level,
)

__version__ = "0.1.0"
