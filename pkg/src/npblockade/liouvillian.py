"""Lindblad generator, direct steady-state solver and a time-evolution oracle.

Vectorization is column-stacking: ``vec(rho)[i + j*D] = rho[i, j]``, so
``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)`` and the Hamiltonian part
of the generator is ``-1j * (kron(I, H) - kron(H.T, I))``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (
    AlgebraError,
    DegenerateSteadyStateError,
    ParameterError,
    SolverError,
    StiffnessError,
)
from .hilbert import CompositeSpace, Operator

log = logging.getLogger(__name__)

__all__ = [
    "CollapseChannel",
    "Symmetry",
    "DensityMatrix",
    "Liouvillian",
    "SolveInfo",
    "dissipator_apply",
    "build_liouvillian",
    "steady_state",
    "evolve",
    "trace_distance",
    "generator_singular_values",
]

RESIDUAL_TOL = 1e-9
DEGENERACY_TOL = 1e-10
GAP_RATIO_MIN = 1e6
POSITIVITY_TOL = -1e-8
DENSE_MAX = 1024  # largest (sector) system solved with dense LU under method="auto"


@dataclass(frozen=True)
class CollapseChannel:
    operator: Operator
    rate: float

    def __post_init__(self):
        if not self.rate >= 0:
            raise ParameterError(f"collapse rate must be >= 0, got {self.rate}")


@dataclass(frozen=True, eq=False)
class Symmetry:
    """Z_m grading of the basis: integer charge per state, conserved mod ``modulus``.

    When every term of the master equation respects the grading, the
    Liouvillian only couples density-matrix elements ``rho[i, j]`` whose
    charge difference ``q_i - q_j`` agrees mod m, and the steady state lives
    in the zero-difference block.
    """

    charges: np.ndarray
    modulus: int

    def sector(self) -> np.ndarray:
        """Column-stacked indices of the ``q_i == q_j (mod m)`` block."""
        q = np.asarray(self.charges)
        D = q.size
        i = np.tile(np.arange(D), D)
        j = np.repeat(np.arange(D), D)
        return np.flatnonzero((q[i] - q[j]) % self.modulus == 0)

    def verify(self, H: Operator, channels: Sequence[CollapseChannel]) -> None:
        q = np.asarray(self.charges)
        if q.size != H.dim:
            raise AlgebraError("symmetry charges do not match the Hilbert dimension")
        diff = (q[:, None] - q[None, :]) % self.modulus
        if np.any(np.abs(H.matrix[diff != 0]) > 0):
            raise AlgebraError("Hamiltonian does not respect the declared symmetry")
        for ch in channels:
            if ch.rate == 0:
                continue
            shifts = np.unique(diff[np.abs(ch.operator.matrix) > 0])
            if shifts.size > 1:
                raise AlgebraError("collapse operator mixes symmetry sectors")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: CompositeSpace
    matrix: np.ndarray

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix.conj().T, self.matrix)))

    def is_valid(self, tol: float = 1e-10, positivity: float = POSITIVITY_TOL) -> bool:
        return (
            abs(self.trace - 1.0) <= tol
            and self.hermiticity_error() <= tol
            and self.min_eigenvalue() >= positivity
        )

    @classmethod
    def from_ket(cls, space: CompositeSpace, psi) -> DensityMatrix:
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls(space, np.outer(psi, psi.conj()))


def trace_distance(rho: DensityMatrix | np.ndarray, sigma: DensityMatrix | np.ndarray) -> float:
    r = getattr(rho, "matrix", rho)
    s = getattr(sigma, "matrix", sigma)
    d = r - s
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def dissipator_apply(o: Operator, rho: DensityMatrix | np.ndarray) -> np.ndarray:
    """``o rho o^dag - 1/2 {o^dag o, rho}``."""
    r = getattr(rho, "matrix", rho)
    if isinstance(rho, DensityMatrix) and rho.space != o.space:
        raise AlgebraError("collapse operator and state live on different spaces")
    if r.shape != o.matrix.shape:
        raise AlgebraError(f"shape mismatch {r.shape} vs {o.matrix.shape}")
    c = o.matrix
    cd = c.conj().T
    cdc = cd @ c
    return c @ r @ cd - 0.5 * (cdc @ r + r @ cdc)


class Liouvillian:
    """Generator of ``d rho/dt = -i[H, rho] + sum_k rate_k D[o_k] rho``.

    The superoperator matrix is assembled lazily (sparse) because the
    matrix-form action :meth:`apply` is all that residual checks and time
    evolution need.
    """

    def __init__(self, hamiltonian: Operator, channels: Sequence[CollapseChannel] = (),
                 symmetry: Symmetry | None = None):
        self.hamiltonian = hamiltonian
        self.channels = tuple(channels)
        self.symmetry = symmetry
        self._sparse = None
        active = [ch for ch in self.channels if ch.rate > 0]
        self._jumps = [(np.sqrt(ch.rate) * ch.operator.matrix) for ch in active]
        loss = sum((j.conj().T @ j for j in self._jumps), np.zeros_like(hamiltonian.matrix))
        self._heff = hamiltonian.matrix - 0.5j * loss

    @property
    def space(self) -> CompositeSpace:
        return self.hamiltonian.space

    @property
    def hilbert_dim(self) -> int:
        return self.hamiltonian.dim

    def apply(self, rho: DensityMatrix | np.ndarray) -> np.ndarray:
        r = getattr(rho, "matrix", rho)
        out = -1j * (self._heff @ r - r @ self._heff.conj().T)
        for j in self._jumps:
            out += j @ r @ j.conj().T
        return out

    def sparse(self) -> sp.csr_matrix:
        if self._sparse is None:
            D = self.hilbert_dim
            eye = sp.identity(D, dtype=np.complex128, format="csr")
            heff = sp.csr_matrix(self._heff)
            L = -1j * (sp.kron(eye, heff) - sp.kron(heff.conj(), eye))
            for j in self._jumps:
                js = sp.csr_matrix(j)
                L = L + sp.kron(js.conj(), js)
            self._sparse = sp.csr_matrix(L)
        return self._sparse

    @property
    def generator(self) -> np.ndarray:
        """Dense ``D^2 x D^2`` superoperator."""
        return self.sparse().toarray()

    def block(self, indices: np.ndarray) -> sp.csr_matrix:
        L = self.sparse()
        return L[indices][:, indices]

    def residual(self, rho: DensityMatrix | np.ndarray) -> float:
        return float(np.linalg.norm(self.apply(rho)))


def build_liouvillian(H: Operator, channels: Sequence[CollapseChannel] = (),
                      symmetry: Symmetry | None = None) -> Liouvillian:
    if not H.is_hermitian(1e-12 * max(1.0, float(np.max(np.abs(H.matrix))))):
        raise AlgebraError("Hamiltonian is not Hermitian")
    for ch in channels:
        if ch.operator.space != H.space:
            raise AlgebraError(
                f"collapse operator on {ch.operator.space.dims}, Hamiltonian on {H.space.dims}"
            )
    if symmetry is not None:
        symmetry.verify(H, channels)
    return Liouvillian(H, channels, symmetry)


def generator_singular_values(L: Liouvillian, k: int = 2) -> np.ndarray:
    """Exact ``k`` smallest singular values of the full generator (dense SVD)."""
    return np.sort(sla.svdvals(L.generator))[:k]


@dataclass(frozen=True)
class SolveInfo:
    residual: float
    smallest_singular: float  # |L x| for the unit null vector x
    second_singular: float  # lower bound: sigma_min of the bordered system
    gap_ratio: float
    method: str
    size: int


def _sigma_min(solve, solve_h, n: int, iters: int = 12) -> float:
    # power iteration on (A^H A)^-1; deterministic start vector
    x = np.linspace(1.0, 2.0, n).astype(np.complex128)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        z = solve_h(solve(x))
        lam = float(np.real(np.vdot(x, z)))
        nz = np.linalg.norm(z)
        if not np.isfinite(nz) or nz == 0:
            return 0.0
        x = z / nz
    return 1.0 / np.sqrt(lam) if lam > 0 else 0.0


def steady_state(L: Liouvillian, method: str = "auto", return_info: bool = False):
    """Unique unit-trace fixed point of ``L``.

    One row of the generator is replaced by the trace functional and the
    resulting nonsingular system is factorized directly. When ``L`` carries a
    :class:`Symmetry`, only the block containing the populations is solved.
    Uniqueness is checked through the smallest singular value of the
    bordered matrix, which bounds the generator's second-smallest one from
    below.
    """
    D = L.hilbert_dim
    if L.symmetry is not None and L.symmetry.modulus > 1:
        idx = L.symmetry.sector()
    else:
        idx = np.arange(D * D)
    n = idx.size
    i_of, j_of = idx % D, idx // D
    A = L.block(idx).tolil()
    trace_row = (i_of == j_of).astype(np.complex128)
    A[0, :] = trace_row
    rhs = np.zeros(n, dtype=np.complex128)
    rhs[0] = 1.0

    if method == "auto":
        method = "dense" if n <= DENSE_MAX else "sparse"
    try:
        if method == "dense":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)  # singularity handled below
                lu = sla.lu_factor(A.toarray(), check_finite=True)
            if np.any(np.abs(np.diag(lu[0])) == 0):
                raise DegenerateSteadyStateError("bordered generator is exactly singular")
            solve = lambda b: sla.lu_solve(lu, b)
            solve_h = lambda b: sla.lu_solve(lu, b, trans=2)
        elif method == "sparse":
            lu = spla.splu(sp.csc_matrix(A))
            solve = lambda b: lu.solve(b)
            solve_h = lambda b: lu.solve(b, trans="H")
        else:
            raise ValueError(f"unknown method {method!r}")
        x = solve(rhs)
    except (RuntimeError, sla.LinAlgError) as exc:
        raise DegenerateSteadyStateError(f"bordered generator is singular: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("steady-state solve produced non-finite values")

    rho = np.zeros((D, D), dtype=np.complex128)
    rho[i_of, j_of] = x
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real

    vec_norm = np.linalg.norm(rho)
    residual = L.residual(rho)
    sigma1 = residual / vec_norm
    sigma2 = _sigma_min(solve, solve_h, n)
    gap = sigma2 / max(sigma1, np.finfo(float).tiny)
    log.debug("steady state: n=%d method=%s residual=%.3e sigma2>=%.3e", n, method, residual, sigma2)
    if sigma2 < DEGENERACY_TOL or gap < GAP_RATIO_MIN:
        raise DegenerateSteadyStateError(
            f"steady state is not unique (sigma2 >= {sigma2:.3e}, gap ratio {gap:.3e})"
        )
    if residual > RESIDUAL_TOL:
        raise SolverError(f"steady-state residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")
    state = DensityMatrix(L.space, rho)
    if return_info:
        return state, SolveInfo(residual, sigma1, sigma2, gap, method, n)
    return state


def evolve(rho0: DensityMatrix, L: Liouvillian, t_final: float, tol: float = 1e-10,
           method: str = "rk") -> DensityMatrix:
    """Propagate ``rho0`` under ``L`` to ``t_final``.

    Both methods are independent of the linear-algebra path in
    :func:`steady_state` and are meant as oracles, not for sweeps.

    ``"rk"`` integrates with adaptive 8th-order Runge-Kutta (DOP853). Its step
    count grows with the generator norm, so large truncations get slow.
    ``"expm"`` applies the propagator ``exp(t L)`` to ``vec(rho0)`` with
    scipy's truncated-Taylor action, restricted to the symmetry sector when
    ``rho0`` lies inside it.
    """
    if not t_final > 0:
        raise ParameterError("t_final must be positive")
    if rho0.space != L.space:
        raise AlgebraError("initial state and Liouvillian live on different spaces")
    D = L.hilbert_dim
    if method == "rk":
        def rhs(_t, y):
            return L.apply(y.reshape(D, D)).ravel()

        sol = solve_ivp(rhs, (0.0, t_final), rho0.matrix.astype(np.complex128).ravel(),
                        method="DOP853", rtol=tol, atol=tol)
        if sol.status != 0:
            raise StiffnessError(f"time integration failed: {sol.message}")
        rho = sol.y[:, -1].reshape(D, D)
    elif method == "expm":
        x0 = rho0.matrix.astype(np.complex128).ravel(order="F")
        idx = np.arange(D * D)
        if L.symmetry is not None and L.symmetry.modulus > 1:
            sector = L.symmetry.sector()
            outside = np.ones(D * D, dtype=bool)
            outside[sector] = False
            if not np.any(x0[outside]):
                idx = sector
        x = spla.expm_multiply(L.block(idx).tocsc() * t_final, x0[idx])
        flat = np.zeros(D * D, dtype=np.complex128)
        flat[idx] = x
        rho = flat.reshape(D, D, order="F")
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(rho)):
        raise StiffnessError("time evolution produced non-finite values")
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return DensityMatrix(L.space, rho)
