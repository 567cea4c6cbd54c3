"""Fourier-mode analysis of the linearization around the circle.

The linearized operator acting on (v_perp, w) is block-diagonal over the
cos/sin Fourier pairs: mode l sees a symmetric 2x2 matrix whose
determinant vanishes exactly at the critical rotation rates
sqrt(l^2-1)/R^2.  At the critical rate for mode k >= 2 the null space is
one-dimensional and spanned by (k cos(ks/R), sqrt(k^2-1) sin(ks/R)); the
derivative of the operator in the rotation rate pairs non-trivially with
that null vector, which is the transversality certificate behind the
bifurcation branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModeError, ParityError, ResolutionError
from .spectral import Grid, ScalarField, differentiate


@dataclass(frozen=True)
class ModeMatrix:
    """Symmetric 2x2 block of the linearized operator on Fourier mode l."""

    l: int
    omega: float
    R: float

    def __post_init__(self):
        if self.l < 1:
            raise ModeError(f"mode index must be >= 1, got {self.l}")

    @property
    def matrix(self) -> np.ndarray:
        l, om, R = self.l, self.omega, self.R
        return np.array([[(l * l - 1.0) / R ** 2, -l * om],
                         [-l * om, l * l / R ** 2]])

    @property
    def determinant(self) -> float:
        l, om, R = self.l, self.omega, self.R
        return (l * l - 1.0) * l * l / R ** 4 - (l * om) ** 2

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def critical_omega(k: int, R: float) -> float:
    """Rotation rate at which Fourier mode k becomes degenerate: sqrt(k^2-1)/R^2."""
    if int(k) != k or k < 2:
        raise ModeError(f"bifurcation modes require integer k >= 2, got {k}")
    return math.sqrt(k * k - 1.0) / R ** 2


def mode_determinant(l: int, omega: float, R: float) -> float:
    """det of the mode-l block; zero iff omega = +-sqrt(l^2-1)/R^2."""
    return ModeMatrix(l, omega, R).determinant


def _check_parities(v_perp: ScalarField, w: ScalarField) -> None:
    if v_perp.parity != "even" or not v_perp.mean_free:
        raise ParityError("v_perp must be even and mean-free")
    if w.parity != "odd":
        raise ParityError("w must be odd")


def apply_linearized(omega: float, v_perp: ScalarField, w: ScalarField):
    """Action of the linearized operator: (-v'' - v/R^2 - R om w', -w'' + R om v')."""
    _check_parities(v_perp, w)
    R = v_perp.grid.R
    first = (-differentiate(v_perp, 2) - (1.0 / R ** 2) * v_perp
             - (R * omega) * differentiate(w))
    second = -differentiate(w, 2) + (R * omega) * differentiate(v_perp)
    return first, second


def apply_linearized_domega(v_perp: ScalarField, w: ScalarField):
    """Derivative of the operator in the rotation rate: (-R w', R v')."""
    _check_parities(v_perp, w)
    R = v_perp.grid.R
    return -R * differentiate(w), R * differentiate(v_perp)


@dataclass(frozen=True)
class KernelVector:
    """Null vector of the critical linearization at mode k."""

    k: int
    v_perp: ScalarField
    w: ScalarField


def kernel_vector(k: int, grid: Grid) -> KernelVector:
    """Sample the mode-k null vector (k cos(ks/R), sqrt(k^2-1) sin(ks/R))."""
    if int(k) != k or k < 2:
        raise ModeError(f"bifurcation modes require integer k >= 2, got {k}")
    if k > grid.dealias_max:
        raise ResolutionError(
            f"mode k={k} exceeds the dealiased cutoff {grid.dealias_max} "
            f"of an N={grid.N} grid; increase N to at least {3 * k + 1}")
    R = grid.R
    v = ScalarField(grid, k * np.cos(k * grid.s / R), "even", mean_free=True)
    w = ScalarField(grid, math.sqrt(k * k - 1.0) * np.sin(k * grid.s / R), "odd")
    return KernelVector(k, v, w)
