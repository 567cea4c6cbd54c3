"""Exception types shared across the package.

Every exception carries a stable machine-readable ``code`` string.  The
command line front end maps any :class:`ScrewbifError` to exit code 3;
the codes also let tests pin down the exact failure mode.
"""


class ScrewbifError(Exception):
    """Base class for numerical / domain failures."""

    code = "E_GENERIC"


class MeanError(ScrewbifError):
    """A mean-free field was required but the input has a nonzero mean."""

    code = "E_MEAN"


class ParityError(ScrewbifError):
    """A field violates its declared even/odd symmetry."""

    code = "E_PARITY"


class GridMismatchError(ScrewbifError):
    """Operands live on different grids."""

    code = "E_GRID"


class ModeError(ScrewbifError):
    """Integer mode outside the admissible range (bifurcation needs k >= 2)."""

    code = "E_MODE"


class ResolutionError(ScrewbifError):
    """The grid cannot resolve the requested mode after dealiasing."""

    code = "E_RESOLUTION"


class EliminationDomainError(ScrewbifError):
    """The dependent-variable solve left its contraction neighborhood."""

    code = "E_IFT_DOMAIN"


class ConvergenceError(ScrewbifError):
    """Newton iteration failed to converge."""

    code = "E_NO_CONVERGE"


class GeometryError(ScrewbifError):
    """A solution violates the tangential frame-margin bound."""

    code = "E_GEOMETRY"


class BlowupError(ScrewbifError):
    """Time integration lost the arclength parameterization (under-resolution)."""

    code = "E_BLOWUP"
