"""ellipsax: geodesic flow on ellipsoids with Lax-pair invariants.

A numerical workbench for the geodesic flow on n-dimensional ellipsoids:
constrained Runge-Kutta integration with dense output, the Lax matrix and
its isospectral invariants, confocal-quadric tangency, self-focal point
scans (umbilic points and their higher-dimensional relatives), and the
Rosochatius flow obtained by reducing a doubled axis.
"""

from ._kernel import BACKEND
from .errors import (
    BarrierProximityError,
    ConstraintViolationError,
    DegeneracyAnomalyWarning,
    DegenerateInputError,
    EllipsaxError,
    InsufficientResolutionError,
    IntegrationFailureError,
    InvalidInputError,
    InvalidIsometryError,
    InvalidMultiplicitiesError,
    MultiplicityWarning,
    NoContactError,
    NoUmbilicFoundError,
    NumericalFailureError,
    PoleOfQError,
    ReductionInconsistencyError,
    UnsupportedDimensionError,
)
from .flow import (
    IntegratorOptions,
    ReturnEvent,
    Trajectory,
    closest_approaches,
    default_return_radius,
    exp_map,
    first_return,
    integrate_geodesic,
    options_with,
    write_trajectory_csv,
)
from .focal import (
    VERDICT_EVIDENCE,
    VERDICT_INCONCLUSIVE,
    VERDICT_NOT,
    DirectionReturn,
    SelfFocalReport,
    SliceEmbedding,
    count_small_deviations,
    direction_grid,
    embed_slice,
    return_map,
    return_map_derivative,
    scan_self_focal,
    special_focal_point,
    transport_directions,
    umbilic_defect,
    umbilic_points,
    validate_isometry,
)
from .geometry import (
    Ellipsoid,
    PhasePoint,
    ShapeReport,
    make_ellipsoid,
    phase_point,
    project_to_ellipsoid,
    project_to_tangent,
    random_unit_tangent,
    shape_operator,
    tangent_frame,
    unit_normal,
)
from .lax import (
    LaxSpectrum,
    TangencyData,
    admissible_variation_basis,
    b_matrix,
    confocal_tangency,
    contact_point_and_normal,
    eigenvalue_variation,
    ellipsoidal_coordinates,
    fd_eigenvalue_variation,
    jacobi_eigh,
    lax_matrix,
    lax_residual,
    lax_spectrum,
    moment_map,
    nonzero_eigenvalues_along,
    phi_identity_residual,
    phi_z,
    q_form,
    spectrum_of,
    variation_jacobian,
)
from .rosochatius import (
    ExperimentRow,
    Reduction211,
    UmbilicReturnReport,
    angular_momentum,
    integrate_rosochatius,
    lift_211,
    reduce_211,
    reduce_states,
    rosochatius_energy,
    umbilic_return_experiment,
    write_experiment_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BarrierProximityError",
    "ConstraintViolationError",
    "DegeneracyAnomalyWarning",
    "DegenerateInputError",
    "DirectionReturn",
    "Ellipsoid",
    "EllipsaxError",
    "ExperimentRow",
    "InsufficientResolutionError",
    "IntegrationFailureError",
    "IntegratorOptions",
    "InvalidInputError",
    "InvalidIsometryError",
    "InvalidMultiplicitiesError",
    "LaxSpectrum",
    "MultiplicityWarning",
    "NoContactError",
    "NoUmbilicFoundError",
    "NumericalFailureError",
    "PhasePoint",
    "PoleOfQError",
    "Reduction211",
    "ReductionInconsistencyError",
    "ReturnEvent",
    "SelfFocalReport",
    "ShapeReport",
    "SliceEmbedding",
    "TangencyData",
    "Trajectory",
    "UmbilicReturnReport",
    "UnsupportedDimensionError",
    "VERDICT_EVIDENCE",
    "VERDICT_INCONCLUSIVE",
    "VERDICT_NOT",
    "admissible_variation_basis",
    "angular_momentum",
    "b_matrix",
    "closest_approaches",
    "confocal_tangency",
    "contact_point_and_normal",
    "count_small_deviations",
    "default_return_radius",
    "direction_grid",
    "eigenvalue_variation",
    "ellipsoidal_coordinates",
    "embed_slice",
    "exp_map",
    "fd_eigenvalue_variation",
    "first_return",
    "integrate_geodesic",
    "integrate_rosochatius",
    "jacobi_eigh",
    "lax_matrix",
    "lax_residual",
    "lax_spectrum",
    "lift_211",
    "make_ellipsoid",
    "moment_map",
    "nonzero_eigenvalues_along",
    "options_with",
    "phase_point",
    "phi_identity_residual",
    "phi_z",
    "project_to_ellipsoid",
    "project_to_tangent",
    "q_form",
    "random_unit_tangent",
    "reduce_211",
    "reduce_states",
    "return_map",
    "return_map_derivative",
    "rosochatius_energy",
    "scan_self_focal",
    "shape_operator",
    "special_focal_point",
    "spectrum_of",
    "tangent_frame",
    "transport_directions",
    "umbilic_defect",
    "umbilic_points",
    "umbilic_return_experiment",
    "unit_normal",
    "validate_isometry",
    "variation_jacobian",
    "write_experiment_csv",
    "write_trajectory_csv",
]
