"""Builders for composite Hilbert spaces and their operators.

Basis ordering is lexicographic with the first declared subsystem
varying slowest, matching :func:`numpy.kron`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product
from math import prod

import numpy as np

from .errors import ContractViolation, InvalidInputError
from .numkernel import as_operator

__all__ = [
    "BasisLabel",
    "SpaceSpec",
    "kron",
    "annihilator",
    "transition",
    "embed",
    "basis_vector",
]


@dataclass(frozen=True)
class BasisLabel:
    """A product-basis ket, e.g. ``|0,2,1>`` for (photon=0, atom1=2, atom2=1)."""

    factors: tuple[tuple[str, int], ...]

    def __str__(self) -> str:
        return "|" + ",".join(str(level) for _, level in self.factors) + ">"


@dataclass(frozen=True)
class SpaceSpec:
    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(name), int(dim)) for name, dim in self.subsystems)
        names = [name for name, _ in subs]
        if len(set(names)) != len(names):
            raise ContractViolation(f"subsystem names must be unique: {names}")
        if any(dim < 1 for _, dim in subs):
            raise InvalidInputError("subsystem dimensions must be positive")
        object.__setattr__(self, "subsystems", subs)

    @classmethod
    def single(cls, dim: int, name: str = "system") -> "SpaceSpec":
        return cls(((name, dim),))

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.subsystems]

    @property
    def dims(self) -> list[int]:
        return [dim for _, dim in self.subsystems]

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    def position(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ContractViolation(f"no subsystem named {name!r} in {self.names}") from None

    def index(self, **levels: int) -> int:
        """Flat index of the product ket with the given level per subsystem."""
        if set(levels) != set(self.names):
            raise ContractViolation(f"need a level for each of {self.names}, got {sorted(levels)}")
        idx = 0
        for name, dim in self.subsystems:
            level = levels[name]
            if not 0 <= level < dim:
                raise InvalidInputError(f"level {level} out of range for {name!r} (dim {dim})")
            idx = idx * dim + level
        return idx

    def labels(self) -> list[BasisLabel]:
        return [
            BasisLabel(tuple(zip(self.names, levels)))
            for levels in product(*(range(d) for d in self.dims))
        ]


def kron(*ops) -> np.ndarray:
    """Tensor product, first factor slowest."""
    if not ops:
        raise ContractViolation("kron needs at least one operator")
    return reduce(np.kron, (np.asarray(op, dtype=np.complex128) for op in ops))


def annihilator(n_max: int) -> np.ndarray:
    """Bosonic lowering operator on Fock states ``|0>, ..., |n_max>``."""
    if n_max < 1:
        raise InvalidInputError("n_max must be at least 1")
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(np.complex128)


def transition(dim: int, to: int, frm: int) -> np.ndarray:
    """The operator ``|to><frm|`` on a ``dim``-level system."""
    if not (0 <= to < dim and 0 <= frm < dim):
        raise InvalidInputError(f"transition indices ({to}, {frm}) out of range for dim {dim}")
    op = np.zeros((dim, dim), dtype=np.complex128)
    op[to, frm] = 1.0
    return op


def embed(local, spec: SpaceSpec, subsystem: str) -> np.ndarray:
    """Lift an operator on one subsystem to the full space of ``spec``."""
    local = as_operator(local, "local operator")
    pos = spec.position(subsystem)
    if local.shape[0] != spec.dims[pos]:
        raise ContractViolation(
            f"operator of dim {local.shape[0]} does not fit subsystem {subsystem!r} of dim {spec.dims[pos]}"
        )
    factors = [np.eye(d, dtype=np.complex128) for d in spec.dims]
    factors[pos] = local
    return kron(*factors)


def basis_vector(dim: int, index: int) -> np.ndarray:
    if not 0 <= index < dim:
        raise InvalidInputError(f"basis index {index} out of range for dim {dim}")
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v
