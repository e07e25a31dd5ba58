"""Distances, metric tensors and monotonicity checks for mixed quantum states."""

SCHEMA_VERSION = "qgeo.v1"

from .errors import (  # noqa: E402
    AmbiguousBranchMatching,
    DegenerateSpectrum,
    DimensionMismatch,
    DomainError,
    NotHermitian,
    NotPSD,
    NotUnitary,
    NumericalFailure,
    QGeoError,
    RadiusOutOfDomain,
    SingularMatrix,
    StepTooLarge,
    TraceNotOne,
    ValidationError,
)
from .states import (  # noqa: E402
    BlochState,
    DensityOperator,
    bloch_to_density,
    density_to_bloch,
    sample_zhsl,
    spectral,
    thermal_state,
    validate_density,
)
from .metrics import (  # noqa: E402
    bures_angle,
    bures_distance,
    bures_line_element,
    fidelity,
    fubini_study_distance,
    generalized_sjoqvist_distance,
    sjoqvist_distance,
    sjoqvist_line_element,
)
from .spin_qubit import FieldParams, analytic_metric, diagnose_degeneracy, numeric_metric  # noqa: E402
from .bloch import GeodesicEndpoints, f_bures, f_sjoqvist, f_zhsl, geodesic_length, mc_line_element  # noqa: E402
from .monotonicity import CPTPChannel, check_contractivity, fidelity_monotonicity_check, sample_cptp  # noqa: E402

__version__ = "0.1.0"
