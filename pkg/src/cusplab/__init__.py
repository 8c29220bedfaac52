"""cusplab: numerical laboratory for a rough body settling onto a flat wall.

Modules
-------
geometry     gap profile psi(r) = h + r**(1+alpha) and the cusp region
testfield    divergence-free test field, its gradient and h-derivative
quadrature   adaptive singular integrals, kernel studies, norm sweeps
certify      closed-form constants and the sufficient collision inequality
lubrication  reduced gap dynamics with power-law drag
cli          deterministic command-line front end
"""

__version__ = "0.1.0"

from .errors import IntegrationError, NumericalError, ParameterError, QuadratureError
from .geometry import (
    CuspGeometry,
    GapPoint,
    ProfileJet,
    in_cusp,
    is_admissible_height,
    psi,
    require_admissible_height,
)
from .testfield import (
    CutoffConfig,
    FieldSample,
    Quantity,
    eval_cusp_field,
    eval_global_field,
    phi_shape,
)
from .quadrature import (
    KernelSweep,
    NormSweep,
    QuadratureConfig,
    Verdict,
    default_h_grid,
    kernel_integral,
    kernel_integral_trapezoid,
    kernel_predicted_exponent,
    kernel_sweep,
    lp_norm,
    norm_sweep,
)
from .certify import (
    CollisionCertificate,
    InitialData,
    PdGuarantee,
    PhysicalParams,
    alpha_max,
    c_gamma,
    c0_empirical,
    final_inequality,
    hdot_bound,
    initial_energy,
    l_const,
    mass_threshold,
    pd_guarantee,
    term_thresholds,
)
from .lubrication import (
    DichotomyRow,
    FallConfig,
    FallMode,
    FallTrajectory,
    FallVerdict,
    LogLawFit,
    beta_of_alpha,
    contact_dichotomy,
    log_law_check,
    simulate_fall,
)

__all__ = [name for name in dir() if not name.startswith("_")]
