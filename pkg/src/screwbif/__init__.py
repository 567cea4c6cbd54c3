"""Spectral construction and verification of rigid screw motions of closed
vortex filaments under the binormal curvature flow, together with the
bifurcation branches on which they live."""

from .branch import (
    BranchPoint,
    BranchSweep,
    monolithic_crosscheck,
    solve_branch_point,
    sweep_branch,
)
from .errors import (
    BlowupError,
    ConvergenceError,
    EliminationDomainError,
    GeometryError,
    GridMismatchError,
    MeanError,
    ModeError,
    ParityError,
    ResolutionError,
    ScrewbifError,
)
from .evolution import DriftReport, EvolutionState, drift_report, integrate, lie_rhs
from .geometry import (
    Curve3,
    FramePerturbation,
    OrbitDistance,
    Residuals,
    ScrewParams,
    assemble_curve,
    circle_profile,
    curve_length,
    frame_margin,
    frenet_frame,
    orbit_distance,
    read_curve_csv,
    residuals,
    screw_evaluate,
    slip_velocity,
    tangential_identity_defect,
    write_curve_csv,
)
from .modes import (
    KernelVector,
    ModeMatrix,
    apply_linearized,
    apply_linearized_domega,
    critical_omega,
    kernel_vector,
    mode_determinant,
)
from .reduction import (
    EliminatedState,
    ReducedState,
    constraint_map,
    reduced_residual,
    solve_eliminated,
)
from .spectral import (
    Grid,
    ScalarField,
    antiderivative,
    differentiate,
    h2_inner,
    mean,
    product,
    shift,
    sup_norm,
)

__version__ = "0.1.0"
