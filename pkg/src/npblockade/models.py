"""Driven-dissipative model builders and their closed-form spectra.

Three systems are covered, each driven either by an n-photon parametric
term ``lam * (a^dag^n + a^n)`` or by a coherent term ``F * (a^dag + a)``:

* Jaynes-Cummings atom-cavity system (cavity + two-level atom),
* a single Kerr-nonlinear cavity,
* two tunnel-coupled Kerr cavities, driven through cavity ``a`` only.

Builders work in the frame rotating at ``omega_p / n``, so detunings take
the place of bare frequencies. All rates and frequencies are in units of
the cavity decay rate ``kappa``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from . import hilbert as hs
from .errors import ParameterError
from .liouvillian import CollapseChannel, Symmetry

__all__ = [
    "DriveSpec",
    "parametric",
    "coherent",
    "JCParams",
    "KerrParams",
    "CoupledKerrParams",
    "ModelSpec",
    "AnalyticLevel",
    "Model",
    "build_jc_hamiltonian",
    "build_kerr_hamiltonian",
    "build_coupled_kerr_hamiltonian",
    "build_hamiltonian",
    "build_model",
    "undriven",
    "excitation_numbers",
    "jc_eigenfrequencies",
    "jc_blockade_detunings",
    "kerr_eigenfrequency",
    "kerr_blockade_detuning",
    "coupled_two_photon_block",
    "coupled_two_photon_eigensystem",
    "coupled_blockade_detunings",
]


@dataclass(frozen=True)
class DriveSpec:
    kind: str  # "parametric" or "coherent"
    amplitude: float
    order: int = 1

    def __post_init__(self):
        if self.kind == "parametric":
            if int(self.order) != self.order or self.order < 2:
                raise ParameterError(
                    f"parametric drive order must be an integer >= 2, got {self.order}"
                )
        elif self.kind == "coherent":
            if self.order != 1:
                raise ParameterError("coherent drive has order 1")
        else:
            raise ParameterError(f"unknown drive kind {self.kind!r}")
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise ParameterError(f"drive amplitude must be finite and >= 0, got {self.amplitude}")

    @property
    def is_parametric(self) -> bool:
        return self.kind == "parametric"

    def with_amplitude(self, amplitude: float) -> DriveSpec:
        return replace(self, amplitude=float(amplitude))


def parametric(order: int, amplitude: float) -> DriveSpec:
    return DriveSpec("parametric", float(amplitude), int(order))


def coherent(amplitude: float) -> DriveSpec:
    return DriveSpec("coherent", float(amplitude), 1)


def _min_dim(drive: DriveSpec) -> int:
    # n-photon drive needs room for g(n+1)
    return drive.order + 3 if drive.is_parametric else 2


def _check_common(kappa, dims, drive, names):
    if not kappa > 0:
        raise ParameterError(f"kappa must be > 0, got {kappa}")
    for name, d in zip(names, dims):
        if int(d) != d or d < _min_dim(drive):
            raise ParameterError(f"{name} must be an integer >= {_min_dim(drive)}, got {d}")


@dataclass(frozen=True)
class JCParams:
    delta: float
    g: float
    gamma: float
    drive: DriveSpec
    cavity_dim: int = 12
    kappa: float = 1.0

    def __post_init__(self):
        _check_common(self.kappa, [self.cavity_dim], self.drive, ["cavity_dim"])
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def kind(self) -> str:
        return "jc"


@dataclass(frozen=True)
class KerrParams:
    delta: float
    U: float
    drive: DriveSpec
    cavity_dim: int = 15
    kappa: float = 1.0

    def __post_init__(self):
        _check_common(self.kappa, [self.cavity_dim], self.drive, ["cavity_dim"])

    @property
    def kind(self) -> str:
        return "kerr"


@dataclass(frozen=True)
class CoupledKerrParams:
    delta: float
    U: float
    J: float
    drive: DriveSpec
    dim_a: int = 8
    dim_b: int = 8
    kappa: float = 1.0

    def __post_init__(self):
        _check_common(self.kappa, [self.dim_a, self.dim_b], self.drive, ["dim_a", "dim_b"])
        if not math.isfinite(self.J):
            raise ParameterError("J must be a finite real number")

    @property
    def kind(self) -> str:
        return "coupled_kerr"


ModelSpec = Union[JCParams, KerrParams, CoupledKerrParams]


@dataclass(frozen=True)
class AnalyticLevel:
    excitation: int
    branch: int
    frequency: float


@dataclass(frozen=True)
class Model:
    """Everything the solver needs for one parameter point."""

    params: ModelSpec
    hamiltonian: hs.Operator
    channels: tuple[CollapseChannel, ...]
    modes: dict[str, int] = field(default_factory=dict)  # cavity label -> slot
    symmetry: Symmetry | None = None

    @property
    def space(self) -> hs.CompositeSpace:
        return self.hamiltonian.space


def excitation_numbers(space: hs.CompositeSpace) -> np.ndarray:
    """Total excitation number of every product basis state (photons + atomic excitation)."""
    grids = np.meshgrid(*[np.arange(d) for d in space.dims], indexing="ij")
    return sum(g.ravel() for g in grids).astype(int)


def _kerr(n: hs.Operator) -> hs.Operator:
    # a^dag a^dag a a = N (N - 1), built from the exact integer diagonal
    return n @ (n - hs.identity(n.space))


def _drive_term(a: hs.Operator, drive: DriveSpec) -> hs.Operator:
    op = a ** drive.order
    return drive.amplitude * (op + op.dag())


def build_jc_hamiltonian(p: JCParams) -> hs.Operator:
    space = hs.CompositeSpace([hs.boson(p.cavity_dim), hs.qubit()])
    a = hs.embed(hs.annihilation(p.cavity_dim), space, 0)
    sm = hs.embed(hs.sigma_minus(), space, 1)
    n = hs.embed(hs.number(p.cavity_dim), space, 0)
    H = p.delta * n + p.delta * (sm.dag() @ sm)
    H = H + p.g * (a.dag() @ sm + sm.dag() @ a)
    return H + _drive_term(a, p.drive)


def build_kerr_hamiltonian(p: KerrParams) -> hs.Operator:
    a = hs.annihilation(p.cavity_dim)
    n = hs.number(p.cavity_dim)
    H = p.delta * n + p.U * _kerr(n)
    return H + _drive_term(a, p.drive)


def build_coupled_kerr_hamiltonian(p: CoupledKerrParams) -> hs.Operator:
    space = hs.CompositeSpace([hs.boson(p.dim_a), hs.boson(p.dim_b)])
    a = hs.embed(hs.annihilation(p.dim_a), space, 0)
    b = hs.embed(hs.annihilation(p.dim_b), space, 1)
    na = hs.embed(hs.number(p.dim_a), space, 0)
    nb = hs.embed(hs.number(p.dim_b), space, 1)
    H = p.delta * na + p.delta * nb
    H = H + p.J * (a.dag() @ b + b.dag() @ a)
    H = H + p.U * (_kerr(na) + _kerr(nb))
    return H + _drive_term(a, p.drive)


def build_hamiltonian(p: ModelSpec) -> hs.Operator:
    if isinstance(p, JCParams):
        return build_jc_hamiltonian(p)
    if isinstance(p, KerrParams):
        return build_kerr_hamiltonian(p)
    if isinstance(p, CoupledKerrParams):
        return build_coupled_kerr_hamiltonian(p)
    raise TypeError(f"not a model parameter set: {type(p).__name__}")


def undriven(p: ModelSpec) -> ModelSpec:
    return replace(p, drive=p.drive.with_amplitude(0.0))


def build_model(p: ModelSpec) -> Model:
    """Hamiltonian, collapse channels, mode labels and Z_n grading for ``p``."""
    H = build_hamiltonian(p)
    space = H.space
    if isinstance(p, JCParams):
        a = hs.embed(hs.annihilation(p.cavity_dim), space, 0)
        sm = hs.embed(hs.sigma_minus(), space, 1)
        channels = (CollapseChannel(a, p.kappa), CollapseChannel(sm, p.gamma))
        modes = {"a": 0}
    elif isinstance(p, KerrParams):
        channels = (CollapseChannel(hs.annihilation(p.cavity_dim), p.kappa),)
        modes = {"a": 0}
    else:
        a = hs.embed(hs.annihilation(p.dim_a), space, 0)
        b = hs.embed(hs.annihilation(p.dim_b), space, 1)
        channels = (CollapseChannel(a, p.kappa), CollapseChannel(b, p.kappa))
        modes = {"a": 0, "b": 1}
    symmetry = None
    if p.drive.is_parametric:
        # the drive changes the excitation number by +-n, everything else conserves it
        symmetry = Symmetry(excitation_numbers(space), p.drive.order)
    return Model(p, H, channels, modes, symmetry)


# -- closed-form spectra and resonance conditions ---------------------------


def jc_eigenfrequencies(n: int, omega_a: float, g: float) -> tuple[float, float]:
    """Dressed-state pair ``n*omega_a -/+ sqrt(n)*g`` of the n-excitation manifold."""
    if n < 1:
        raise ParameterError("excitation number must be >= 1")
    split = math.sqrt(n) * g
    return n * omega_a - split, n * omega_a + split


def jc_blockade_detunings(n: int, g: float) -> tuple[float, float]:
    """Detunings at which a dressed n-excitation level is resonant with the n-photon drive."""
    if n < 2:
        raise ParameterError("blockade order must be >= 2")
    d = abs(g) / math.sqrt(n)
    return -d, d


def kerr_eigenfrequency(n: int, omega_a: float, U: float) -> float:
    if n < 0:
        raise ParameterError("photon number must be >= 0")
    return omega_a * n + U * (n * n - n)


def kerr_blockade_detuning(n: int, U: float) -> float:
    if n < 2:
        raise ParameterError("blockade order must be >= 2")
    return -U * (n - 1)


def coupled_two_photon_block(omega_a: float, U: float, J: float) -> np.ndarray:
    """Two-excitation Hamiltonian block over ``|20>, |11>, |02>``."""
    r = math.sqrt(2.0) * J
    e = 2.0 * omega_a
    return np.array(
        [
            [e + 2.0 * U, r, 0.0],
            [r, e, r],
            [0.0, r, e + 2.0 * U],
        ]
    )


def coupled_two_photon_eigensystem(
    omega_a: float, U: float, J: float
) -> tuple[list[AnalyticLevel], np.ndarray]:
    """Closed-form eigenpairs of :func:`coupled_two_photon_block`.

    Returns levels in branch order (1, 2, 3) and unit eigenvectors as the
    columns of a 3x3 array. Branches 1 and 3 are the ``-/+`` roots of
    ``2*omega_a + U -/+ sqrt(4J^2 + U^2)``; branch 2 is the antisymmetric
    state at ``2*(omega_a + U)``. For ``J == 0`` the Fock states are
    returned, sorted by energy.
    """
    s = math.sqrt(4.0 * J * J + U * U)
    if J == 0:
        fock = [(2.0 * omega_a, [0.0, 1.0, 0.0]),
                (2.0 * omega_a + 2.0 * U, [1.0, 0.0, 0.0]),
                (2.0 * omega_a + 2.0 * U, [0.0, 0.0, 1.0])]
        fock.sort(key=lambda item: item[0])
        levels = [AnalyticLevel(2, j + 1, w) for j, (w, _) in enumerate(fock)]
        return levels, np.array([v for _, v in fock]).T

    freqs = [2.0 * omega_a + U - s, 2.0 * (U + omega_a), 2.0 * omega_a + U + s]
    vecs = [
        [1.0, -(U + s) / (math.sqrt(2.0) * J), 1.0],
        [-1.0, 0.0, 1.0],
        [1.0, -(U - s) / (math.sqrt(2.0) * J), 1.0],
    ]
    V = np.array(vecs).T
    V /= np.linalg.norm(V, axis=0)
    levels = [AnalyticLevel(2, j + 1, w) for j, w in enumerate(freqs)]
    return levels, V


def coupled_blockade_detunings(U: float, J: float) -> tuple[tuple[float, float, float], tuple[float, float]]:
    """Two-photon resonance detunings (ascending) and the two level spacings.

    The spacings are ``sqrt(4J^2+U^2) -/+ U``, the distances between
    neighbouring two-excitation levels.
    """
    s = math.sqrt(4.0 * J * J + U * U)
    detunings = tuple(sorted((-U, (-U - s) / 2.0, (-U + s) / 2.0)))
    return detunings, (s - U, s + U)
