"""Numerical laboratory for Bernstein-type gradient bounds of Laplace eigenfunctions."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlabError,
    ConfigError,
    DomainError,
    IngestError,
    NotResolvedError,
    UndefinedFrequencyError,
    UnresolvedSupremumError,
)
from .fields import GeodesicBall, ScalarField, expansion_field  # noqa: E402
from .quadrature import Quadrature, ball_rule, sphere_rule  # noqa: E402
from .sphharm import (  # noqa: E402
    HarmonicExpansion,
    ball_mean_square,
    dim_harmonics,
    exact_frequency,
    project_to_expansion,
    sphere_mean_square,
    truncate,
    zonal_kernel,
)
from .supnorm import ResolutionPolicy, SupResult, sup_norm  # noqa: E402
from .frequency import (  # noqa: E402
    CoefficientField,
    doubling_index,
    frequency_numeric,
    frequency_profile,
    sup_vs_boundary_l2,
)
from .eigenfields import (  # noqa: E402
    DongState,
    LiftedField,
    SphereEigenfunction,
    TorusEigenfunction,
    dong_F_profile,
    dong_log_q_laplacian_check,
    eigen_check,
    lift,
    load_eigenfunction,
    random_sphere_eigenfunction,
    random_torus_eigenfunction,
    save_eigenfunction,
)
from .lab import (  # noqa: E402
    SweepConfig,
    approximate_by_truncation,
    bernstein_ratio,
    bound_values,
    classical_baselines,
    growth_check,
    lp_growth_check,
    polynomial_bernstein_lp,
    sweep,
)
from .io import RunManifest, SampledField, ingest  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
