"""Spectral solver and verification harness for a coupled Cahn-Hilliard /
nutrient tumor-growth system on box domains with no-flux boundaries."""

from .basis import (
    EigenvalueTable,
    FieldNorms,
    Grid,
    ShapeError,
    SpectralField,
    apply_A,
    apply_A_inv,
    apply_neg_laplacian,
    constant_field,
    from_spectral,
    norms,
    to_spectral,
)
from .diagnostics import (
    DualDistance,
    EnergyBreakdown,
    dissipation,
    dual_distance,
    energy,
    energy_identity_residual,
)
from .dynamics import (
    SchemeConfig,
    SimState,
    StepError,
    StepReport,
    chemical_potential,
    final_state,
    noisy_state,
    run,
    step,
)
from .potentials import (
    ResolventError,
    SplitPotential,
    YosidaPotential,
    double_well,
    eval_F,
    eval_Fm,
    exponential,
    quadratic,
    resolvent,
    validate_F,
    verify_lemma_bounds,
)
from .proliferation import (
    ProliferationFn,
    constant,
    eval_p,
    smooth_bump,
    truncated_quadratic,
    validate_p,
    zero,
)

__version__ = "0.1.0"
