"""Construction of the bifurcation branches by bordered Newton continuation.

A branch point at amplitude lam solves the square bordered system

    { reduced normal residual = 0,
      reduced binormal residual = 0,
      H2 projection of (v_perp, w) onto the critical kernel = lam }

for the unknowns (omega, v_perp, w), with the slaved variables supplied
by the elimination solve.  The amplitude is *defined* as the kernel
projection coefficient, which keeps the system square and makes the
remainder of the solution H2-orthogonal to the kernel.

Continuation is natural-parameter only: points are solved from the
smallest amplitude outward, the previous point (rescaled) serving as
predictor.  The Jacobian is assembled by forward differences in
trigonometric coefficient space and solved directly; after the sweep the
quadratic coefficient of the axial-speed offset is extracted from the
three smallest amplitudes by two-level Richardson extrapolation (the
expansion is even in the amplitude, so corrections step by two powers).

:func:`monolithic_crosscheck` solves the full system (normal, binormal
and arclength residuals with all six unknown groups, no elimination) and
provides an independent oracle for the reduction path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    EliminationDomainError,
    GeometryError,
    ResolutionError,
)
from .geometry import (
    FramePerturbation,
    assemble_curve,
    frame_margin,
    orbit_distance,
    residuals,
    slip_velocity,
)
from .modes import critical_omega, kernel_vector
from .reduction import EliminatedState, ReducedState, _reduced_with_state
from .spectral import (
    DEFAULT_N,
    Grid,
    cos_coefficients,
    field_from_cos,
    field_from_sin,
    h2_inner,
    mean,
    sin_coefficients,
    sup_norm,
)

TOL_OUTER = 1e-10
MAX_OUTER = 30

_FD_REL = 1e-7
_FD_FLOOR = 0.05


@dataclass(frozen=True)
class BranchPoint:
    """One converged point of a bifurcation branch."""

    amplitude: float
    omega: float
    reduced: ReducedState
    eliminated: EliminatedState
    c: float
    v_axial: float
    residual_sup: float
    dist_to_sigma: float

    @property
    def delta_v(self) -> float:
        return self.v_axial - 1.0 / self.grid.R

    @property
    def grid(self) -> Grid:
        return self.reduced.grid

    @property
    def perturbation(self) -> FramePerturbation:
        return FramePerturbation(u=self.eliminated.u, v0=self.eliminated.v0,
                                 v_perp=self.reduced.v_perp, w=self.reduced.w)

    def curve(self):
        return assemble_curve(self.perturbation, self.grid)


@dataclass(frozen=True)
class BranchSweep:
    """Amplitude sweep of one branch plus the extracted quadratic coefficient."""

    k: int
    R: float
    amplitudes: tuple
    points: tuple
    dv_coefficient: float
    truncated: bool


def _check_grid_resolves(k: int, grid: Grid) -> None:
    if 2 * k > grid.dealias_max:
        raise ResolutionError(
            f"branch at mode k={k} needs mode 2k={2 * k} after dealiasing, but "
            f"an N={grid.N} grid keeps only l <= {grid.dealias_max}; "
            f"increase N to at least {6 * k + 1}")


def _trivial_point(k: int, grid: Grid) -> BranchPoint:
    from .spectral import ScalarField
    om = critical_omega(k, grid.R)
    rs = ReducedState(om, ScalarField.zeros(grid, "even", mean_free=True),
                      ScalarField.zeros(grid, "odd"))
    es = EliminatedState(0.0, ScalarField.zeros(grid, "odd"), 0.0)
    return BranchPoint(0.0, om, rs, es, c=-grid.R * om, v_axial=1.0 / grid.R,
                       residual_sup=0.0, dist_to_sigma=0.0)


def _finalize(amplitude, rs, es, grid) -> BranchPoint:
    p = FramePerturbation(u=es.u, v0=es.v0, v_perp=rs.v_perp, w=rs.w)
    r = residuals(p, rs.omega, es.delta_v)
    residual_sup = max(sup_norm(r.normal), sup_norm(r.binormal),
                       sup_norm(r.arclength))
    margin = frame_margin(p)
    if margin < 0.5:
        raise GeometryError(
            f"frame margin {margin:.3f} fell below 1/2; the tangential "
            "residual can no longer be recovered from the frame identity")
    v_axial = 1.0 / grid.R + es.delta_v
    y = assemble_curve(p, grid)
    c, _ = slip_velocity(y, rs.omega, v_axial)
    dist = orbit_distance(y).dist
    return BranchPoint(float(amplitude), float(rs.omega), rs, es, c=c,
                       v_axial=v_axial, residual_sup=residual_sup,
                       dist_to_sigma=dist)


class _BorderedSystem:
    """Residual of the bordered reduced system in coefficient space."""

    def __init__(self, k: int, grid: Grid, amplitude: float):
        self.grid = grid
        self.m = grid.dealias_max
        self.amplitude = amplitude
        kern = kernel_vector(k, grid)
        self.kern = (kern.v_perp, kern.w)
        self.kern_norm2 = h2_inner(self.kern, self.kern)

    def unpack(self, x: np.ndarray) -> ReducedState:
        m = self.m
        return ReducedState(float(x[0]), field_from_cos(self.grid, x[1:m + 1]),
                            field_from_sin(self.grid, x[m + 1:]))

    def pack(self, omega, v_perp, w) -> np.ndarray:
        m = self.m
        return np.concatenate(([omega], cos_coefficients(v_perp, m),
                               sin_coefficients(w, m)))

    def __call__(self, x: np.ndarray, guess: EliminatedState | None):
        rs = self.unpack(x)
        g1, g2, es = _reduced_with_state(rs, guess=guess)
        proj = h2_inner((rs.v_perp, rs.w), self.kern) / self.kern_norm2
        vec = np.concatenate(([proj - self.amplitude],
                              cos_coefficients(g1, self.m),
                              sin_coefficients(g2, self.m)))
        norm = max(abs(proj - self.amplitude), sup_norm(g1), sup_norm(g2))
        return vec, norm, es


def _fd_jacobian(fun, x, r0, es0):
    n = x.size
    J = np.empty((n, n))
    for j in range(n):
        h = _FD_REL * max(abs(x[j]), _FD_FLOOR)
        xp = x.copy()
        xp[j] += h
        rp, _, _ = fun(xp, es0)
        J[:, j] = (rp - r0) / h
    return J


def _newton(fun, x0, es0, tol, max_iter, label):
    """Damped-free Newton with forward-difference Jacobian and chord polish."""
    x = x0
    es = es0
    J = None
    best = np.inf
    for _ in range(max_iter):
        r, norm, es = fun(x, es)
        if norm <= tol:
            # polish with the last Jacobian: one cheap chord step usually
            # gains two digits and keeps downstream certificates roomy
            for _ in range(2):
                if norm <= 5e-13 or J is None:
                    break
                x = x - np.linalg.solve(J, r)
                r, new_norm, es = fun(x, es)
                if new_norm >= norm:
                    break
                norm = new_norm
            return x, es, norm
        if not np.isfinite(norm) or norm > 1e6 * max(best, 1.0):
            raise ConvergenceError(f"{label}: residual diverged ({norm:.3e})")
        best = min(best, norm)
        J = _fd_jacobian(fun, x, r, es)
        try:
            x = x - np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"{label}: singular Jacobian: {exc}")
    raise ConvergenceError(
        f"{label}: no convergence in {max_iter} iterations (residual {norm:.3e})")


def solve_branch_point(k: int, R: float, amplitude: float,
                       grid: Grid | None = None,
                       predictor: BranchPoint | None = None,
                       tol: float = TOL_OUTER,
                       max_iter: int = MAX_OUTER) -> BranchPoint:
    """Solve one branch point at the given kernel-projection amplitude.

    With no predictor the initial guess is the critical rotation rate and
    the kernel scaled by the amplitude.  The amplitude-zero point is the
    circle itself and is returned directly (the rotation rate is
    undetermined on the trivial branch, so the bordered system would be
    singular there).
    """
    grid = grid if grid is not None else Grid(R, DEFAULT_N)
    _check_grid_resolves(k, grid)
    if amplitude == 0.0:
        return _trivial_point(k, grid)

    system = _BorderedSystem(k, grid, amplitude)
    if predictor is not None and predictor.amplitude != 0.0:
        ratio = amplitude / predictor.amplitude
        x0 = system.pack(predictor.omega, predictor.reduced.v_perp,
                         predictor.reduced.w)
        x0[1:] *= ratio
        es0 = EliminatedState(predictor.eliminated.delta_v * ratio ** 2,
                              ratio * predictor.eliminated.u,
                              predictor.eliminated.v0 * ratio ** 2)
    else:
        kern = kernel_vector(k, grid)
        x0 = system.pack(critical_omega(k, R), amplitude * kern.v_perp,
                         amplitude * kern.w)
        es0 = None

    x, es, _ = _newton(system, x0, es0, tol, max_iter,
                       label=f"branch point (k={k}, lam={amplitude:g})")
    rs = system.unpack(x)
    return _finalize(amplitude, rs, es, grid)


def sweep_branch(k: int, R: float, lambda_max: float, n_points: int,
                 grid: Grid | None = None) -> BranchSweep:
    """Continue the branch over a geometric amplitude ladder up to lambda_max.

    Points are solved from the smallest amplitude (lambda_max / 2^{n-1})
    outward.  A failed point truncates the sweep with a warning so the
    reachable amplitude range is still reported; failure of the very
    first point propagates.
    """
    if n_points < 4:
        raise ValueError(f"a sweep needs at least 4 points, got {n_points}")
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    grid = grid if grid is not None else Grid(R, DEFAULT_N)
    lambdas = [lambda_max * 2.0 ** (-(n_points - 1 - j)) for j in range(n_points)]

    points: list[BranchPoint] = []
    truncated = False
    predictor = None
    for lam in lambdas:
        try:
            point = solve_branch_point(k, R, lam, grid=grid, predictor=predictor)
        except (ConvergenceError, GeometryError, EliminationDomainError) as exc:
            if not points:
                raise ConvergenceError(
                    f"first sweep point at lambda={lam:g} failed ({exc}); "
                    "last good amplitude is 0") from exc
            warnings.warn(
                f"sweep truncated at lambda={lam:g} ({exc}); reachable "
                f"amplitude range is [0, {points[-1].amplitude:g}]",
                stacklevel=2)
            truncated = True
            break
        points.append(point)
        predictor = point

    dv_coeff = _richardson_dv(points)
    return BranchSweep(k=k, R=R,
                       amplitudes=tuple(p.amplitude for p in points),
                       points=tuple(points), dv_coefficient=dv_coeff,
                       truncated=truncated)


def _richardson_dv(points) -> float:
    """Two-level Richardson estimate of delta_v / lambda^2 as lambda -> 0.

    Uses the three smallest amplitudes of a ratio-2 ladder and assumes
    the next correction is quadratic in lambda (even symmetry of the
    branch), then quartic.
    """
    if len(points) < 3:
        return float("nan")
    smallest = sorted(points, key=lambda p: abs(p.amplitude))[:3]
    d = [p.delta_v / p.amplitude ** 2 for p in smallest]
    f01 = (4.0 * d[0] - d[1]) / 3.0
    f12 = (4.0 * d[1] - d[2]) / 3.0
    return float((16.0 * f01 - f12) / 15.0)


class _MonolithicSystem:
    """Full residual (no elimination): all six unknown groups at once."""

    def __init__(self, k: int, grid: Grid, amplitude: float):
        self.grid = grid
        self.m = grid.dealias_max
        self.amplitude = amplitude
        kern = kernel_vector(k, grid)
        self.kern = (kern.v_perp, kern.w)
        self.kern_norm2 = h2_inner(self.kern, self.kern)

    def unpack(self, x: np.ndarray):
        m = self.m
        omega, delta_v, v0 = float(x[0]), float(x[1]), float(x[2])
        u = field_from_sin(self.grid, x[3:3 + m])
        v_perp = field_from_cos(self.grid, x[3 + m:3 + 2 * m])
        w = field_from_sin(self.grid, x[3 + 2 * m:])
        return omega, delta_v, v0, u, v_perp, w

    def __call__(self, x: np.ndarray, _unused=None):
        omega, delta_v, v0, u, v_perp, w = self.unpack(x)
        p = FramePerturbation(u=u, v0=v0, v_perp=v_perp, w=w)
        r = residuals(p, omega, delta_v)
        proj = h2_inner((v_perp, w), self.kern) / self.kern_norm2
        m = self.m
        vec = np.concatenate((
            [proj - self.amplitude],
            [mean(r.normal)], cos_coefficients(r.normal, m),
            sin_coefficients(r.binormal, m),
            [mean(r.arclength)], cos_coefficients(r.arclength, m),
        ))
        norm = max(abs(proj - self.amplitude), sup_norm(r.normal),
                   sup_norm(r.binormal), sup_norm(r.arclength))
        return vec, norm, None


def monolithic_crosscheck(k: int, R: float, amplitude: float,
                          grid: Grid | None = None,
                          tol: float = TOL_OUTER,
                          max_iter: int = MAX_OUTER) -> BranchPoint:
    """Solve the full system in one bordered Newton; oracle for the reduction.

    No variables are eliminated: (omega, delta_v, v0, u, v_perp, w) are
    solved simultaneously against the normal, binormal and arclength
    residuals plus the amplitude constraint, with a forward-difference
    Jacobian.  Agreement with :func:`solve_branch_point` certifies the
    elimination path end to end.
    """
    grid = grid if grid is not None else Grid(R, DEFAULT_N)
    _check_grid_resolves(k, grid)
    if amplitude == 0.0:
        return _trivial_point(k, grid)

    system = _MonolithicSystem(k, grid, amplitude)
    m = grid.dealias_max
    x0 = np.zeros(3 + 3 * m)
    x0[0] = critical_omega(k, R)
    x0[3 + (k - 1)] = amplitude                       # u ~ lam sin(ks/R)
    x0[3 + m + (k - 1)] = amplitude * k               # v_perp ~ lam k cos(ks/R)
    x0[3 + 2 * m + (k - 1)] = amplitude * np.sqrt(k * k - 1.0)

    x, _, _ = _newton(system, x0, None, tol, max_iter,
                      label=f"monolithic point (k={k}, lam={amplitude:g})")
    omega, delta_v, v0, u, v_perp, w = system.unpack(x)
    rs = ReducedState(omega, v_perp, w)
    es = EliminatedState(delta_v, u, v0)
    return _finalize(amplitude, rs, es, grid)
