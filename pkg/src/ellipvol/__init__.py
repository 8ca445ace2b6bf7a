"""Log-volumes of random simplices spanned by elliptically distributed points."""

from .errors import (
    ConfigError,
    DomainError,
    EllipvolError,
    NonPositiveVariance,
    NotPositive,
    NotSymmetric,
    NumericalError,
    OverflowGuard,
    RankDeficient,
    SingularInner,
    SingularM,
    TooFewSamples,
)
from .estimator import LogVolumeStandardizer
from .geometry import (
    ConvexBodyKind,
    body_log_volume,
    linear_image_log_volume,
    pinned_simplex_log_volume,
    upsilon_log_volume,
)
from .linalg import (
    Spectrum,
    jacobi_spectrum,
    log_det_gram,
    nested_projection_diagonals,
    normalize_spectrum,
    perpendicular_log_det,
    projection_diagonal,
    projection_matrix,
)
from .sampling import (
    EllipticalModel,
    RadialLaw,
    RandomStream,
    derive_replicate_seed,
    elliptical_sample,
    stable_reference_sample,
)
from .stats import (
    GofReport,
    RegimeClassification,
    classify_regime,
    ks_one_sample_normal,
    ks_two_sample,
    quadratic_form_moment_check,
    standardize,
)
from .theory import (
    NormingConstants,
    TMatrix,
    beta_moment,
    estimate_t_matrix,
    norming_constants,
    simulate_ztilde,
    t_matrix_identity,
    variance_limit,
    ztilde_second_moment,
)

__version__ = "0.1.0"
