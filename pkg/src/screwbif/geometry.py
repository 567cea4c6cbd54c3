"""Circle geometry, frame perturbations, and the traveling-profile residuals.

The reference state is the circle of radius R parameterized by arc
length.  Perturbed curves are written in the circle's orthonormal frame
as y = circle + u*t + (v0 + v_perp)*n + w*b, where t/n/b are the unit
tangent, inward normal and the vertical binormal.  A rigidly rotating,
axially translating profile with tangential slip c must satisfy

    y_s x y_ss = c y_s + omega e3 x y + V e3,   |y_s| = 1.

Expanded in the frame this becomes four scalar residual fields: the
tangential, normal and binormal components of the momentum balance plus
the arclength constraint.  The tangential residual is never imposed by
the solvers; it is recovered from the algebraic identity tying all four
together (see :func:`tangential_identity_defect`), provided the frame
margin 1 + u_s - v/R stays above 1/2.

The distance to the symmetry manifold (all rotations about e3 and rigid
translations of the circle) is measured in the discrete H2 norm and is
minimized in closed form: translations only shift the curve mean, and a
rotation of the circle equals a parameter shift, so the angle enters
through a single first-harmonic sinusoid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GridMismatchError
from .spectral import (
    Grid,
    ScalarField,
    differentiate,
    product,
    shift,
    sup_norm,
)

#: lower bound on 1 + u_s - v/R required of every accepted solution
FRAME_MARGIN_MIN = 0.5

#: numeric format used for curve serialization (17 significant digits)
CSV_FMT = "%.16e"


@dataclass(frozen=True)
class Curve3:
    """Closed curve sampled on the spectral grid, one field per component."""

    grid: Grid
    components: tuple

    def __post_init__(self):
        if len(self.components) != 3:
            raise ValueError("a curve needs exactly three components")
        for c in self.components:
            if c.grid != self.grid:
                raise GridMismatchError("curve component on a different grid")
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def from_array(cls, grid: Grid, xyz: np.ndarray) -> "Curve3":
        xyz = np.asarray(xyz, dtype=float)
        if xyz.shape != (3, grid.N):
            raise ValueError(f"expected shape (3, {grid.N}), got {xyz.shape}")
        return cls(grid, tuple(ScalarField(grid, row) for row in xyz))

    @property
    def array(self) -> np.ndarray:
        return np.vstack([c.values for c in self.components])

    def shifted(self, sigma: float) -> "Curve3":
        """Curve s -> x(s + sigma)."""
        return Curve3(self.grid, tuple(shift(c, sigma) for c in self.components))


@dataclass(frozen=True)
class FramePerturbation:
    """Frame components of a displacement from the circle.

    u: tangential (odd), v0: mean normal offset, v_perp: oscillatory
    normal part (even, mean-free), w: binormal (odd).  Tags are enforced
    by the field constructors; grids must agree.
    """

    u: ScalarField
    v0: float
    v_perp: ScalarField
    w: ScalarField

    def __post_init__(self):
        from .errors import ParityError, MeanError
        if self.u.grid != self.v_perp.grid or self.u.grid != self.w.grid:
            raise GridMismatchError("perturbation components on different grids")
        if self.u.parity != "odd" or self.w.parity != "odd":
            raise ParityError("u and w must be odd fields")
        if self.v_perp.parity != "even":
            raise ParityError("v_perp must be an even field")
        if not self.v_perp.mean_free:
            raise MeanError("v_perp must be mean-free")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: Grid) -> "FramePerturbation":
        return cls(ScalarField.zeros(grid, "odd"), 0.0,
                   ScalarField.zeros(grid, "even", mean_free=True),
                   ScalarField.zeros(grid, "odd"))


@dataclass(frozen=True)
class ScrewParams:
    """Parameters of one rigid screw motion: rotation rate, slip, axial speed."""

    R: float
    omega: float
    c: float
    v_axial: float

    @property
    def delta_v(self) -> float:
        """Axial speed offset from the circle's 1/R."""
        return self.v_axial - 1.0 / self.R


@dataclass(frozen=True)
class Residuals:
    """Frame residuals of the profile equation plus the arclength constraint."""

    tangential: ScalarField
    normal: ScalarField
    binormal: ScalarField
    arclength: ScalarField
    quadratic: ScalarField


class OrbitDistance(NamedTuple):
    dist: float
    alpha: float
    tau: np.ndarray


def circle_profile(grid: Grid) -> Curve3:
    """The arclength-parameterized circle of radius R in the horizontal plane."""
    R = grid.R
    x = ScalarField(grid, R * np.cos(grid.s / R), "even")
    y = ScalarField(grid, R * np.sin(grid.s / R), "odd")
    z = ScalarField.zeros(grid, "even", mean_free=True)
    return Curve3(grid, (x, y, z))


def frenet_frame(grid: Grid):
    """Unit tangent, inward normal and vertical binormal of the circle."""
    R = grid.R
    t = Curve3(grid, (
        ScalarField(grid, -np.sin(grid.s / R), "odd"),
        ScalarField(grid, np.cos(grid.s / R), "even"),
        ScalarField.zeros(grid, "even", mean_free=True),
    ))
    n = Curve3(grid, (
        ScalarField(grid, -np.cos(grid.s / R), "even"),
        ScalarField(grid, -np.sin(grid.s / R), "odd"),
        ScalarField.zeros(grid, "even", mean_free=True),
    ))
    b = Curve3(grid, (
        ScalarField.zeros(grid, "even", mean_free=True),
        ScalarField.zeros(grid, "even", mean_free=True),
        ScalarField(grid, np.ones(grid.N), "even"),
    ))
    return t, n, b


def assemble_curve(p: FramePerturbation, grid: Grid) -> Curve3:
    """circle + u*t + (v0 + v_perp)*n + w*b."""
    if p.grid != grid:
        raise GridMismatchError("perturbation grid differs from target grid")
    x0 = circle_profile(grid)
    t, n, b = frenet_frame(grid)
    v = p.v0 + p.v_perp
    comps = []
    for i in range(3):
        comp = x0.components[i] + p.u * t.components[i] + v * n.components[i] \
            + p.w * b.components[i]
        comps.append(comp)
    return Curve3(grid, tuple(comps))


def residuals(p: FramePerturbation, omega: float, delta_v: float,
              dealias: bool = True) -> Residuals:
    """Evaluate the four residual fields at a frame perturbation.

    With ``dealias=True`` (default) every quadratic product is truncated
    by the 2/3 rule, which is the arithmetic the Newton solvers use.
    ``dealias=False`` keeps raw nodal products; that variant is exact at
    the nodes and is what the cubic frame identity requires.
    """
    R = p.grid.R
    mul = lambda f, g: product(f, g, dealias=dealias)

    u_s = differentiate(p.u)
    u_ss = differentiate(p.u, 2)
    vp_s = differentiate(p.v_perp)
    vp_ss = differentiate(p.v_perp, 2)
    w_s = differentiate(p.w)
    w_ss = differentiate(p.w, 2)
    v = p.v0 + p.v_perp

    a = u_s - v * (1.0 / R)            # tangent speed defect, even
    b = vp_s + p.u * (1.0 / R)         # normal speed component, odd
    quad = 0.5 * (mul(a, a) + mul(b, b) + mul(w_s, w_s))

    tangential = -u_ss + (1.0 / R) * vp_s + omega * mul(p.u, w_s) - delta_v * b
    normal = (-vp_ss - (1.0 / R) * u_s - (R * omega) * w_s
              + omega * mul(v, w_s) + delta_v * (1.0 + a))
    binormal = (-w_ss + (R * omega) * vp_s
                - omega * mul(p.u, u_s) - omega * mul(v, vp_s))
    arclength = a + quad
    return Residuals(tangential, normal, binormal, arclength, quad)


def tangential_identity_defect(p: FramePerturbation, omega: float,
                               delta_v: float) -> float:
    """Sup-norm defect of the identity tying the four residuals together.

    (1 + u_s - v/R)*T + (v_s + u/R)*N + w_s*B + d/ds(arclength residual)
    vanishes identically (it is the inner product of the profile equation
    with y_s), off-shell as well as on-shell.  Evaluated with raw nodal
    products; band-limited inputs below a quarter of the Nyquist mode
    keep the identity exact to rounding.
    """
    r = residuals(p, omega, delta_v, dealias=False)
    R = p.grid.R
    u_s = differentiate(p.u)
    vp_s = differentiate(p.v_perp)
    w_s = differentiate(p.w)
    v = p.v0 + p.v_perp
    a = u_s - v * (1.0 / R)
    b = vp_s + p.u * (1.0 / R)
    lhs = (product(1.0 + a, r.tangential, dealias=False)
           + product(b, r.normal, dealias=False)
           + product(w_s, r.binormal, dealias=False))
    rhs = -differentiate(r.arclength)
    return sup_norm(lhs - rhs)


def frame_margin(p: FramePerturbation) -> float:
    """min over the grid of 1 + u_s - v/R."""
    u_s = differentiate(p.u)
    v = p.v0 + p.v_perp
    return float(np.min(1.0 + u_s.values - v.values / p.grid.R))


def _derivative_array(grid: Grid, arr: np.ndarray, order: int = 1) -> np.ndarray:
    spec = np.fft.rfft(arr, axis=-1)
    spec *= (1j * grid.xi) ** order
    if order % 2 == 1:
        spec[..., -1] = 0.0
    return np.fft.irfft(spec, n=grid.N, axis=-1)


def slip_velocity(y: Curve3, omega: float, v_axial: float):
    """Recover the tangential slip of a screw profile.

    Returns ``(c, variation)`` where c is the mean of the pointwise slip
    function g(s) = -y_s . (omega e3 x y + V e3) and ``variation`` is
    sup |g - c|.  For a true profile g is constant, so the variation is
    an on-shell certificate; off-shell inputs give a meaningful mean but
    a large variation.
    """
    arr = y.array
    ys = _derivative_array(y.grid, arr)
    speed = np.sqrt((ys ** 2).sum(axis=0))
    if np.max(np.abs(speed - 1.0)) > 1e-6:
        warnings.warn("slip_velocity: curve is not arclength parameterized "
                      f"(sup ||y_s|-1| = {np.max(np.abs(speed - 1.0)):.3e})",
                      stacklevel=2)
    g = -(ys[0] * (-omega * arr[1]) + ys[1] * (omega * arr[0]) + ys[2] * v_axial)
    c = float(g.mean())
    variation = float(np.max(np.abs(g - c)))
    return c, variation


def screw_evaluate(y: Curve3, sp: ScrewParams, t: float) -> Curve3:
    """Rigid screw motion of a profile: rotate, slip the parameter, lift."""
    theta = sp.omega * t
    shifted = y.shifted(sp.c * t).array
    ct, st = np.cos(theta), np.sin(theta)
    out = np.empty_like(shifted)
    out[0] = ct * shifted[0] - st * shifted[1]
    out[1] = st * shifted[0] + ct * shifted[1]
    out[2] = shifted[2] + sp.v_axial * t
    return Curve3.from_array(y.grid, out)


def _h2_norm_sq_array(grid: Grid, arr: np.ndarray) -> float:
    spec = np.fft.rfft(arr, axis=-1)
    xi2 = grid.xi ** 2
    terms = (spec * spec.conj()).real * (1.0 + xi2 + xi2 ** 2)
    total = terms[..., 0] + 2.0 * terms[..., 1:-1].sum(axis=-1) + terms[..., -1]
    return float(grid.L / grid.N ** 2 * np.sum(total))


def orbit_distance(x: Curve3) -> OrbitDistance:
    """H2 distance from a curve to the rotated/translated circle manifold.

    The translation minimizer is the mean difference (only the zeroth
    Fourier mode of the L2 part sees it).  The rotation angle enters the
    cross term as A cos(alpha) + B sin(alpha) through the first-harmonic
    content of the curve, so alpha* = atan2(B, A).  The distance itself
    is then evaluated directly at the minimizer, which avoids the
    catastrophic cancellation of the expanded quadratic form.
    """
    grid = x.grid
    R = grid.R
    arr = x.array
    tau = arr.mean(axis=1)
    cen = arr - tau[:, None]

    spec_x = np.fft.rfft(cen[0])
    spec_y = np.fft.rfft(cen[1])
    n = grid.N
    a1x, b1x = 2.0 * spec_x[1].real / n, -2.0 * spec_x[1].imag / n
    a1y, b1y = 2.0 * spec_y[1].real / n, -2.0 * spec_y[1].imag / n
    w1 = 1.0 + 1.0 / R ** 2 + 1.0 / R ** 4
    scale = np.pi * R * R * w1
    acoef = scale * (a1x + b1y)
    bcoef = scale * (-b1x + a1y)
    alpha = float(np.arctan2(bcoef, acoef)) % (2.0 * np.pi)

    phase = grid.s / R + alpha
    ref = np.vstack([R * np.cos(phase), R * np.sin(phase), np.zeros(grid.N)])
    dist_sq = _h2_norm_sq_array(grid, cen - ref)
    return OrbitDistance(float(np.sqrt(max(dist_sq, 0.0))), alpha, tau)


def curve_length(y: Curve3) -> float:
    """Arc length int |y_s| ds from the spectral tangent."""
    ys = _derivative_array(y.grid, y.array)
    speed = np.sqrt((ys ** 2).sum(axis=0))
    return float(speed.mean() * y.grid.L)


def write_curve_csv(path, curve: Curve3, header_comments=()) -> None:
    """Serialize a curve as CSV rows s, x, y, z at 17 significant digits."""
    arr = curve.array
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write("s,x,y,z\n")
        for j in range(curve.grid.N):
            row = (curve.grid.s[j], arr[0, j], arr[1, j], arr[2, j])
            fh.write(",".join(CSV_FMT % v for v in row) + "\n")


def read_curve_csv(path) -> Curve3:
    """Load a curve written by :func:`write_curve_csv`; grid is inferred."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("s,"):
                continue
            rows.append([float(tok) for tok in line.split(",")])
    data = np.asarray(rows)
    n = data.shape[0]
    ds = data[1, 0] - data[0, 0]
    R = n * ds / (2.0 * np.pi)
    grid = Grid(R=R, N=n)
    return Curve3.from_array(grid, data[:, 1:].T)
