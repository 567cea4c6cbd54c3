"""Pseudospectral calculus for real periodic fields on a circle of radius R.

Fields are sampled on N equispaced points of the parameter interval
[0, 2*pi*R).  Differentiation, antidifferentiation, phase shifts and the
weighted inner products are evaluated through the real FFT and are exact
(to rounding) on band-limited data.  Nonlinear terms are formed pointwise
and truncated with the 2/3 rule, so quadratic products never alias back
onto retained modes.

Each field carries a parity tag (even/odd about s = 0) and a mean-free
flag.  Tags are validated on construction and re-imposed by projection
after every pointwise product, which keeps the symmetry subspaces exact
in floating point instead of merely approximate.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, MeanError, ParityError

#: relative tolerance for parity / mean-free validation
TOL_PARITY = 1e-10

#: highest spectral derivative order the solver ever needs
MAX_DERIVATIVE_ORDER = 4

#: default grid size (adequate for R = 1 and modes k <= 8)
DEFAULT_N = 256

_PARITY_FLIP = {"even": "odd", "odd": "even", "any": "any"}
_PARITY_MUL = {
    ("even", "even"): "even",
    ("odd", "odd"): "even",
    ("even", "odd"): "odd",
    ("odd", "even"): "odd",
}


@dataclass(frozen=True)
class Grid:
    """Equispaced periodic grid: N samples of [0, L) with L = 2*pi*R."""

    R: float
    N: int

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError(f"radius must be positive, got {self.R}")
        if self.N < 16 or self.N % 2 != 0:
            raise ValueError(f"N must be even and >= 16, got {self.N}")

    @property
    def L(self) -> float:
        return 2.0 * np.pi * self.R

    @property
    def ds(self) -> float:
        return self.L / self.N

    @functools.cached_property
    def s(self) -> np.ndarray:
        pts = np.arange(self.N) * self.ds
        pts.flags.writeable = False
        return pts

    @functools.cached_property
    def xi(self) -> np.ndarray:
        """Angular wavenumbers l/R of the rfft bins, l = 0..N/2."""
        freqs = np.arange(self.N // 2 + 1) / self.R
        freqs.flags.writeable = False
        return freqs

    @property
    def max_mode(self) -> int:
        """Largest integer mode below Nyquist."""
        return self.N // 2 - 1

    @property
    def dealias_max(self) -> int:
        """Largest mode kept by the 2/3-rule truncation (strict: 3*m < N)."""
        return (self.N - 1) // 3

    @functools.cached_property
    def _keep(self) -> np.ndarray:
        mask = np.arange(self.N // 2 + 1) <= self.dealias_max
        mask.flags.writeable = False
        return mask


def _reflect(values: np.ndarray) -> np.ndarray:
    """Samples of s -> f(-s) on the same grid."""
    return np.roll(values[::-1], 1)


def _dealias_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    spec = np.fft.rfft(values)
    spec[~grid._keep] = 0.0
    return np.fft.irfft(spec, n=grid.N)


@dataclass(frozen=True)
class ScalarField:
    """Real periodic field with parity and mean-free bookkeeping.

    ``values`` are samples at ``grid.s``; they are stored read-only.  An
    ``odd`` field is mean-free by construction, so the flag is forced.
    Construction validates the declared tags to ``TOL_PARITY`` relative
    to the sup norm and raises :class:`ParityError` / :class:`MeanError`
    otherwise; use :meth:`project` to impose tags instead of checking.
    """

    grid: Grid
    values: np.ndarray
    parity: str = "any"
    mean_free: bool = False

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {vals.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.parity not in ("even", "odd", "any"):
            raise ValueError(f"unknown parity tag {self.parity!r}")
        if self.parity == "odd":
            object.__setattr__(self, "mean_free", True)
        scale = max(float(np.max(np.abs(vals))), 1e-300)
        if self.parity == "even":
            defect = float(np.max(np.abs(vals - _reflect(vals))))
            if defect > TOL_PARITY * scale:
                raise ParityError(f"even-parity defect {defect:.3e} exceeds tolerance")
        elif self.parity == "odd":
            defect = float(np.max(np.abs(vals + _reflect(vals))))
            if defect > TOL_PARITY * scale:
                raise ParityError(f"odd-parity defect {defect:.3e} exceeds tolerance")
        if self.mean_free:
            m = abs(float(vals.mean()))
            if m > TOL_PARITY * scale:
                raise MeanError(f"mean {m:.3e} of a mean-free field exceeds tolerance")

    # -- constructors -------------------------------------------------

    @classmethod
    def project(cls, grid: Grid, values, parity: str = "any",
                mean_free: bool = False) -> "ScalarField":
        """Build a field by projecting onto the declared symmetry class."""
        vals = np.asarray(values, dtype=float)
        if parity == "even":
            vals = 0.5 * (vals + _reflect(vals))
        elif parity == "odd":
            vals = 0.5 * (vals - _reflect(vals))
        if mean_free and parity != "odd":
            vals = vals - vals.mean()
        return cls(grid, vals, parity, mean_free)

    @classmethod
    def from_function(cls, grid: Grid, fn, parity: str = "any",
                      mean_free: bool = False) -> "ScalarField":
        return cls(grid, fn(grid.s), parity, mean_free)

    @classmethod
    def zeros(cls, grid: Grid, parity: str = "any",
              mean_free: bool = False) -> "ScalarField":
        return cls(grid, np.zeros(grid.N), parity, mean_free)

    # -- arithmetic ----------------------------------------------------

    def _binary_parity(self, other: "ScalarField") -> str:
        return self.parity if self.parity == other.parity else "any"

    def __add__(self, other):
        # results of linear ops are constructed through the projector: sampled
        # fields are symmetric only to rounding, and cancellation can leave a
        # result whose own scale is pure dust
        if isinstance(other, ScalarField):
            _check_grid(self, other)
            return ScalarField.project(self.grid, self.values + other.values,
                                       self._binary_parity(other),
                                       self.mean_free and other.mean_free)
        c = float(other)
        parity = self.parity if self.parity != "odd" else ("odd" if c == 0.0 else "any")
        return ScalarField.project(self.grid, self.values + c, parity,
                                   self.mean_free and c == 0.0)

    __radd__ = __add__

    def __neg__(self):
        return ScalarField(self.grid, -self.values, self.parity, self.mean_free)

    def __sub__(self, other):
        return self + (-other if isinstance(other, ScalarField) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return product(self, other)
        return ScalarField.project(self.grid, self.values * float(other),
                                   self.parity, self.mean_free)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / float(other))


def _check_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError(
                f"grids differ: (R={g.R}, N={g.N}) vs (R={f.grid.R}, N={f.grid.N})")


def product(f: ScalarField, g: ScalarField, dealias: bool = True) -> ScalarField:
    """Pointwise product, 2/3-rule truncated and parity-projected by default.

    ``dealias=False`` keeps the raw nodal product; this is what algebraic
    identities between residual fields require, since truncation changes
    nodal values whenever genuine product content sits above the cutoff.
    """
    _check_grid(f, g)
    vals = f.values * g.values
    parity = _PARITY_MUL.get((f.parity, g.parity), "any")
    if dealias:
        vals = _dealias_values(f.grid, vals)
    return ScalarField.project(f.grid, vals, parity, mean_free=False)


def differentiate(f: ScalarField, order: int = 1) -> ScalarField:
    """Spectral derivative d^order/ds^order.

    Parity flips with each derivative (even <-> odd) and the result is
    mean-free.  Orders above ``MAX_DERIVATIVE_ORDER`` are rejected: the
    solver never needs them and high orders amplify rounding noise.
    """
    if not 1 <= int(order) <= MAX_DERIVATIVE_ORDER:
        raise ValueError(
            f"derivative order must be in 1..{MAX_DERIVATIVE_ORDER}, got {order}")
    order = int(order)
    spec = np.fft.rfft(f.values)
    spec *= (1j * f.grid.xi) ** order
    if order % 2 == 1:
        spec[-1] = 0.0  # the Nyquist mode has no representable odd derivative
    vals = np.fft.irfft(spec, n=f.grid.N)
    parity = f.parity
    for _ in range(order % 2):
        parity = _PARITY_FLIP[parity]
    return ScalarField.project(f.grid, vals, parity, mean_free=True)


def mean(f: ScalarField) -> float:
    """Average (1/L) * integral of f; exact for resolved trigonometric data."""
    return float(f.values.mean())


def antiderivative(f: ScalarField) -> ScalarField:
    """The unique odd field g with g_s = f, for even mean-free f.

    Raises :class:`MeanError` if the input is not flagged mean-free and
    :class:`ParityError` if it is not even.
    """
    if not f.mean_free:
        raise MeanError("antiderivative requires a mean-free field")
    if f.parity != "even":
        raise ParityError("antiderivative requires an even field")
    spec = np.fft.rfft(f.values)
    out = np.zeros_like(spec)
    out[1:-1] = spec[1:-1] / (1j * f.grid.xi[1:-1])
    # mode 0 carries no information (mean-free input); the Nyquist mode of an
    # even field would integrate to an unrepresentable sine, drop it.
    vals = np.fft.irfft(out, n=f.grid.N)
    return ScalarField.project(f.grid, vals, "odd")


def shift(f: ScalarField, sigma: float) -> ScalarField:
    """Samples of s -> f(s + sigma) via a spectral phase shift."""
    spec = np.fft.rfft(f.values)
    spec *= np.exp(1j * f.grid.xi * sigma)
    spec[-1] = 0.0  # shifted Nyquist mode is not representable on the grid
    vals = np.fft.irfft(spec, n=f.grid.N)
    return ScalarField(f.grid, vals, "any", f.mean_free)


def sup_norm(f: ScalarField) -> float:
    return float(np.max(np.abs(f.values)))


def _weighted_inner(f: ScalarField, g: ScalarField) -> float:
    """Sum_{j=0..2} int d^j f d^j g ds, via Parseval with weight 1+xi^2+xi^4."""
    F = np.fft.rfft(f.values)
    G = np.fft.rfft(g.values)
    xi2 = f.grid.xi ** 2
    terms = (F * G.conj()).real * (1.0 + xi2 + xi2 ** 2)
    total = terms[0] + 2.0 * terms[1:-1].sum() + terms[-1]
    return float(f.grid.L / f.grid.N ** 2 * total)


def h2_inner(fpair, gpair) -> float:
    """H2 pairing of two-component fields.

    Parameters
    ----------
    fpair, gpair : tuple of two ScalarField
        Components on a common grid.

    Returns
    -------
    float
        Sum over components m and derivative orders j = 0..2 of
        ``int d^j f_m d^j g_m ds``.  Symmetric, bilinear, exact on
        resolved trigonometric polynomials.
    """
    f1, f2 = fpair
    g1, g2 = gpair
    _check_grid(f1, f2, g1, g2)
    return _weighted_inner(f1, g1) + _weighted_inner(f2, g2)


# -- coefficient-space helpers (used by the Newton solvers) ------------


def cos_coefficients(f: ScalarField, m: int) -> np.ndarray:
    """Coefficients of cos(l s/R), l = 1..m."""
    spec = np.fft.rfft(f.values)
    return 2.0 * spec[1:m + 1].real / f.grid.N


def sin_coefficients(f: ScalarField, m: int) -> np.ndarray:
    """Coefficients of sin(l s/R), l = 1..m."""
    spec = np.fft.rfft(f.values)
    return -2.0 * spec[1:m + 1].imag / f.grid.N


def field_from_cos(grid: Grid, coeffs, mean_value: float = 0.0) -> ScalarField:
    """Even field sum_l coeffs[l-1] cos(l s/R) + mean_value."""
    coeffs = np.asarray(coeffs, dtype=float)
    spec = np.zeros(grid.N // 2 + 1, dtype=complex)
    spec[0] = mean_value * grid.N
    spec[1:len(coeffs) + 1] = coeffs * (grid.N / 2.0)
    vals = np.fft.irfft(spec, n=grid.N)
    return ScalarField.project(grid, vals, "even", mean_free=(mean_value == 0.0))


def field_from_sin(grid: Grid, coeffs) -> ScalarField:
    """Odd field sum_l coeffs[l-1] sin(l s/R)."""
    coeffs = np.asarray(coeffs, dtype=float)
    spec = np.zeros(grid.N // 2 + 1, dtype=complex)
    spec[1:len(coeffs) + 1] = -1j * coeffs * (grid.N / 2.0)
    vals = np.fft.irfft(spec, n=grid.N)
    return ScalarField.project(grid, vals, "odd")


@functools.lru_cache(maxsize=32)
def trig_tables(grid: Grid, m: int):
    """(N, m) synthesis tables cos(l s/R), sin(l s/R) for l = 1..m."""
    phases = np.outer(grid.s / grid.R, np.arange(1, m + 1))
    tc, ts = np.cos(phases), np.sin(phases)
    tc.flags.writeable = False
    ts.flags.writeable = False
    return tc, ts


def mode_amplitudes(f: ScalarField) -> np.ndarray:
    """Per-mode amplitude |a_l| + |b_l| style diagnostic (2|F_l|/N, l >= 1)."""
    spec = np.abs(np.fft.rfft(f.values)) / f.grid.N
    spec[1:] *= 2.0
    return spec


def random_field(grid: Grid, rng: np.random.Generator, max_mode: int,
                 parity: str = "any", mean_free: bool = False,
                 amplitude: float = 1.0, decay: float = 2.0) -> ScalarField:
    """Random band-limited field with algebraically decaying coefficients."""
    ls = np.arange(1, max_mode + 1)
    weight = amplitude * (1.0 + ls) ** (-decay)
    a = rng.standard_normal(max_mode) * weight
    b = rng.standard_normal(max_mode) * weight
    if parity == "even":
        b[:] = 0.0
    elif parity == "odd":
        a[:] = 0.0
    c0 = 0.0
    if not mean_free and parity != "odd":
        c0 = float(rng.standard_normal()) * 0.3 * amplitude
    spec = np.zeros(grid.N // 2 + 1, dtype=complex)
    spec[0] = c0 * grid.N
    spec[1:max_mode + 1] = (a - 1j * b) * (grid.N / 2.0)
    vals = np.fft.irfft(spec, n=grid.N)
    return ScalarField(grid, vals, parity, mean_free)
