"""Expectation values, photon statistics and the blockade classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import hilbert as hs
from .errors import AlgebraError, BlockadeError, VanishingPhotonNumberError
from .liouvillian import DensityMatrix

__all__ = [
    "MEAN_PHOTON_FLOOR",
    "CorrelationReport",
    "expectation",
    "mode_operator",
    "factorial_moment",
    "mean_photon_number",
    "g_n",
    "fock_populations",
    "fock_tail",
    "truncation_ok",
    "classify_blockade",
    "correlation_report",
]

MEAN_PHOTON_FLOOR = 1e-12


def expectation(rho: DensityMatrix, op: hs.Operator) -> complex:
    if rho.space != op.space:
        raise AlgebraError(f"state on {rho.space.dims}, operator on {op.space.dims}")
    # tr(O rho) without forming the product
    return complex(np.sum(op.matrix * rho.matrix.T))


def mode_operator(space: hs.CompositeSpace, slot: int) -> hs.Operator:
    mode = space.modes[slot]
    if mode.kind != "boson":
        raise AlgebraError(f"slot {slot} is not a bosonic mode")
    return hs.embed(hs.annihilation(mode.dim), space, slot)


def factorial_moment(rho: DensityMatrix, slot: int, n: int) -> float:
    """``<a^dag^n a^n>`` for the mode at ``slot``.

    The operator is assembled as ``N (N-1) ... (N-n+1)`` from the integer
    number operator, which equals ``a^dag^n a^n`` on the truncated space and
    keeps Fock-state moments exact in floating point.
    """
    mode = rho.space.modes[slot]
    if mode.kind != "boson":
        raise AlgebraError(f"slot {slot} is not a bosonic mode")
    N = hs.number(mode.dim)
    op = hs.identity(N.space)
    for j in range(n):
        op = op @ (N - j * hs.identity(N.space))
    return float(np.real(expectation(rho, hs.embed(op, rho.space, slot))))


def mean_photon_number(rho: DensityMatrix, slot: int = 0) -> float:
    return factorial_moment(rho, slot, 1)


def g_n(rho: DensityMatrix, mode_slot: int, n: int) -> float:
    """Equal-time n-th order correlation ``<a^dag^n a^n> / <a^dag a>^n``."""
    if n < 1:
        raise ValueError("correlation order must be >= 1")
    mean = mean_photon_number(rho, mode_slot)
    if mean <= MEAN_PHOTON_FLOOR:
        raise VanishingPhotonNumberError(
            f"<a^dag a> = {mean:.3e} is below {MEAN_PHOTON_FLOOR:g}; g({n}) undefined"
        )
    return max(factorial_moment(rho, mode_slot, n), 0.0) / mean**n


def fock_populations(rho: DensityMatrix, mode_slot: int) -> np.ndarray:
    """Photon-number distribution of one mode (diagonal of the reduced state)."""
    dims = rho.space.dims
    if not 0 <= mode_slot < len(dims):
        raise AlgebraError(f"no mode at slot {mode_slot}")
    diag = np.real(np.diag(rho.matrix)).reshape(dims)
    other = tuple(k for k in range(len(dims)) if k != mode_slot)
    return diag.sum(axis=other) if other else diag


def fock_tail(rho: DensityMatrix, mode_slot: int) -> float:
    p = fock_populations(rho, mode_slot)
    return float(p[-2:].sum())


def truncation_ok(rho: DensityMatrix, mode_slot: int, tol: float) -> bool:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return fock_tail(rho, mode_slot) <= tol


def classify_blockade(g_n_value: float, g_n_plus_1_value: float) -> bool:
    """n-photon bunching together with (n+1)-photon antibunching.

    Undefined (NaN) correlations never classify as blockade.
    """
    if g_n_value < 0 or g_n_plus_1_value < 0:
        raise BlockadeError("correlation functions are non-negative")
    if math.isnan(g_n_value) or math.isnan(g_n_plus_1_value):
        return False
    return g_n_value >= 1.0 and g_n_plus_1_value < 1.0


@dataclass
class CorrelationReport:
    mode: str
    g: dict[int, float] = field(default_factory=dict)  # NaN marks "undefined"
    mean_n: float = 0.0
    fock_tail: float = 0.0
    populations: np.ndarray | None = None

    def defined(self, n: int) -> bool:
        return n in self.g and not math.isnan(self.g[n])

    def log_g(self, n: int) -> float:
        v = self.g.get(n, math.nan)
        return math.log(v) if v > 0 else (-math.inf if v == 0 else math.nan)


def correlation_report(rho: DensityMatrix, mode_slot: int, orders: Iterable[int],
                       label: str = "a") -> CorrelationReport:
    mean = mean_photon_number(rho, mode_slot)
    pops = fock_populations(rho, mode_slot)
    g = {}
    for n in orders:
        try:
            g[n] = g_n(rho, mode_slot, n)
        except VanishingPhotonNumberError:
            g[n] = math.nan
    return CorrelationReport(label, g, mean, float(pops[-2:].sum()), pops)
