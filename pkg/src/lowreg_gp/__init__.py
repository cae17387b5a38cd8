"""Low-regularity integrators for the Gross-Pitaevskii equation on the torus."""

from .datagen import RegularitySpec, random_sobolev_field, truncated_projection
from .harness import (
    ConvergenceReport,
    ExperimentConfig,
    ReferencePolicy,
    convergence_study,
    fit_order,
    measure_error,
    reference_solution,
    write_report,
)
from .multipliers import (
    apply_exp_laplacian,
    apply_filter_psi,
    apply_phi,
    phi1_scalar,
    phi2_scalar,
)
from .schemes import (
    BlowUpError,
    SchemeId,
    StepConfig,
    commutator_C,
    evolve,
    nonlinearity_f,
    oscillatory_integral_oracle,
    quadratic_source,
    step,
    step_baseline,
    step_lri1,
    step_lri2_fd,
    step_lri2_filtered,
)
from .spectral import (
    Field,
    Grid,
    GridMismatchError,
    conj_field,
    from_fourier,
    gradient,
    pointwise_mul,
    sobolev_norm,
    to_fourier,
)

__version__ = "0.1.0"
