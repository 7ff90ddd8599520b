"""Periodic Parseval wavelet frames: construction from dyadic scaling masks
and numerical certification of the frame identity."""

from .spectra import (
    DyadicSequence,
    FrameIndex,
    Spectrum,
    dft,
    fold_pair,
    frame_coefficients,
    frame_shifts,
    inner_product,
)
from .masks import (
    FundamentalCoefficients,
    RefinementChain,
    WaveletSystem,
    derive_chain,
    telescoping_energy,
    theta_closed_form,
    theta_recursion,
    wavelet_spectra,
)
from .construct import (
    ActivationProfile,
    AngleParameters,
    AngleSlot,
    AuxiliaryMasks,
    BuildResult,
    TildePair,
    activation_profile,
    build_construction,
    build_masks,
    check_sys2,
    product_certificate,
    random_admissible_slots,
    solve_rho1,
    solve_sys2_general,
    tilde_from_angles,
    tilde_pair_from_angles,
)
from .schedules import (
    AngleSolution,
    Schedule,
    check_example1_feasibility,
    forward_products,
    geometric_xi_schedule,
    solve_example1,
    solve_example2,
)
from .certify import (
    Certificate,
    ConditionRecord,
    OracleReport,
    check_coefficient_criterion,
    check_mask_criterion,
    frame_energy,
    parseval_oracle,
    probe_imag,
    probe_real,
    telescoped_energy,
)
from .errors import (
    ConstructionPreconditionError,
    DegenerateParameterizationError,
    FeasibilityError,
    SingularConfigurationError,
)
from .verdicts import FAIL, INCONCLUSIVE, PASS, SKIPPED, limit_verdict

__version__ = "0.1.0"
