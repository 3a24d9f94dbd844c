"""Small sound-soft obstacles made invisible in a rectangular acoustic waveguide.

The package computes waveguide modes and the outgoing Green's function,
asymptotic reflection/transmission coefficients of small obstacles, a
point-scatterer reference model, fixed-point invisibility designs and the
bound that rules out perfect transmission.
"""
__version__ = "0.1.0"

from .coefficients import (  # noqa: E402
    SIGN_SIGMA,
    Fly,
    FlyConfig,
    capacity_sphere,
    evaluate_u1,
    s1_coefficients,
    s2_coefficients,
)
from .designers import (  # noqa: E402
    DesignReport,
    build_invertible_B,
    build_multimodal_design,
    choose_positions_monomodal,
    choose_positions_size_design,
    choose_transverse_point,
    compute_gammas,
    doubling_placement,
    fly_count,
    solve_multimodal_fixed_point,
    solve_position_fixed_point,
    solve_size_fixed_point,
)
from .errors import *  # noqa: E402,F401,F403
from .foldy import FoldySystem, ScatterReport, calibrate_sign_sigma, expansion_errors, remainder  # noqa: E402
from .green import GreenEvaluator  # noqa: E402
from .modal import CrossSection, ModeBasis, build_mode_basis, eigenpair, mode_value, mode_values  # noqa: E402
from .obstruction import (  # noqa: E402
    ObstructionBound,
    mixed_spectrum,
    slab_half_length,
    transmission_bound,
    transmission_deviation,
)
