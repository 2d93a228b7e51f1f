"""Truncated Hilbert spaces and dense operator algebra.

Basis conventions used everywhere in the package:

* Fock basis ascending, ``|0>, |1>, ..., |dim-1>``.
* Qubit basis ``{|g>, |e>}`` in that order.
* Composite index is row-major over the ordered mode list, i.e. the
  first mode is the slowest-varying index (``np.kron`` order).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from numbers import Number
from typing import Sequence

import numpy as np

from .errors import AlgebraError, DimensionError, EmbeddingError

__all__ = [
    "ModeSpace",
    "CompositeSpace",
    "Operator",
    "boson",
    "qubit",
    "annihilation",
    "creation",
    "number",
    "sigma_minus",
    "sigma_plus",
    "identity",
    "embed",
    "add",
    "scale",
    "matmul",
    "dagger",
    "commutator",
    "basis_state",
]


@dataclass(frozen=True)
class ModeSpace:
    kind: str  # "boson" or "qubit"
    dim: int

    def __post_init__(self):
        if self.kind == "qubit":
            if self.dim != 2:
                raise DimensionError(f"qubit dimension must be 2, got {self.dim}")
        elif self.kind == "boson":
            if int(self.dim) != self.dim or self.dim < 2:
                raise DimensionError(f"boson truncation must be an integer >= 2, got {self.dim}")
        else:
            raise DimensionError(f"unknown mode kind {self.kind!r}")


def boson(dim: int) -> ModeSpace:
    return ModeSpace("boson", dim)


def qubit() -> ModeSpace:
    return ModeSpace("qubit", 2)


@dataclass(frozen=True)
class CompositeSpace:
    modes: tuple[ModeSpace, ...]

    def __init__(self, modes: Sequence[ModeSpace]):
        modes = tuple(modes)
        if not modes:
            raise DimensionError("a composite space needs at least one mode")
        object.__setattr__(self, "modes", modes)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.dim for m in self.modes)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.modes)

    def index(self, occupations: Sequence[int]) -> int:
        """Flat basis index of the product state with the given per-mode labels."""
        if len(occupations) != len(self.modes):
            raise DimensionError("one label per mode required")
        return int(np.ravel_multi_index(tuple(occupations), self.dims))


def _as_space(space) -> CompositeSpace:
    if isinstance(space, CompositeSpace):
        return space
    if isinstance(space, ModeSpace):
        return CompositeSpace([space])
    return CompositeSpace(space)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix tagged with the space it acts on.

    The backing array is made read-only so operators can be shared freely.
    """

    space: CompositeSpace
    matrix: np.ndarray

    def __init__(self, space, matrix):
        space = _as_space(space)
        m = np.array(matrix, dtype=np.complex128)
        if m.shape != (space.dim, space.dim):
            raise DimensionError(
                f"matrix shape {m.shape} does not match space dimension {space.dim}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.space.dim

    def dag(self) -> Operator:
        return dagger(self)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, rtol=0.0, atol=atol))

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(-1.0, other))

    def __neg__(self):
        return scale(-1.0, self)

    def __mul__(self, c):
        if isinstance(c, Number):
            return scale(c, self)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return matmul(self, other)
        return NotImplemented

    def __pow__(self, k: int) -> Operator:
        if int(k) != k or k < 0:
            raise ValueError("operator powers must be non-negative integers")
        return Operator(self.space, np.linalg.matrix_power(self.matrix, int(k)))

    def __repr__(self):
        return f"Operator(dims={self.space.dims})"


def _check_same(a: Operator, b: Operator):
    if a.space != b.space:
        raise AlgebraError(f"space mismatch: {a.space.dims} vs {b.space.dims}")


def add(a: Operator, b: Operator) -> Operator:
    _check_same(a, b)
    return Operator(a.space, a.matrix + b.matrix)


def scale(c: complex, a: Operator) -> Operator:
    return Operator(a.space, c * a.matrix)


def matmul(a: Operator, b: Operator) -> Operator:
    _check_same(a, b)
    return Operator(a.space, a.matrix @ b.matrix)


def dagger(a: Operator) -> Operator:
    return Operator(a.space, a.matrix.conj().T)


def commutator(a: Operator, b: Operator) -> Operator:
    _check_same(a, b)
    return Operator(a.space, a.matrix @ b.matrix - b.matrix @ a.matrix)


def annihilation(dim: int) -> Operator:
    """Truncated lowering operator with ``<k-1|a|k> = sqrt(k)``."""
    mode = boson(dim)
    return Operator(mode, np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1))


def creation(dim: int) -> Operator:
    return dagger(annihilation(dim))


def number(dim: int) -> Operator:
    mode = boson(dim)
    return Operator(mode, np.diag(np.arange(dim, dtype=float)))


def sigma_minus() -> Operator:
    """Atomic lowering operator ``|g><e|`` in the basis ``{|g>, |e>}``."""
    return Operator(qubit(), [[0.0, 1.0], [0.0, 0.0]])


def sigma_plus() -> Operator:
    return dagger(sigma_minus())


def identity(space) -> Operator:
    space = _as_space(space)
    return Operator(space, np.eye(space.dim))


def embed(op: Operator, space: CompositeSpace, slot: int) -> Operator:
    """Lift a single-mode operator onto ``space``, acting on mode ``slot``."""
    space = _as_space(space)
    if len(op.space) != 1:
        raise EmbeddingError("only single-mode operators can be embedded")
    if not 0 <= slot < len(space):
        raise EmbeddingError(f"slot {slot} out of range for {len(space)} modes")
    if op.space.modes[0] != space.modes[slot]:
        raise EmbeddingError(
            f"operator mode {op.space.modes[0]} does not match slot {slot} mode {space.modes[slot]}"
        )
    factors = [np.eye(m.dim) for m in space.modes]
    factors[slot] = op.matrix
    return Operator(space, reduce(np.kron, factors))


def basis_state(space, occupations: Sequence[int]) -> np.ndarray:
    """Ket of a product basis state as a complex vector."""
    space = _as_space(space)
    v = np.zeros(space.dim, dtype=np.complex128)
    v[space.index(occupations)] = 1.0
    return v
