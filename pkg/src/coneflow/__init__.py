"""Numerical toolkit for star-shaped curves on the light cone in Lorentzian
R^4 and their conformal shadows on the 2-sphere: group-based moving frames,
differential invariants, the projectivization correspondence, geometric
Poisson structures, and the realization of a complexly coupled KdV system
as an arc-length-preserving curve flow.
"""

__version__ = "0.1.0"

from . import errors, tolerances  # noqa: F401
from .lorentz_core import J, minkowski_inner, cone_residual  # noqa: F401
from .periodic_calculus import PeriodicGrid, GridFunction  # noqa: F401
from .cone_geometry import (  # noqa: F401
    ConeCurve,
    ConeInvariants,
    cone_frame,
    cone_invariants,
    cone_invariants_closed_form,
    reparametrize_arclength,
    validate_cone_curve,
)
from .sphere_geometry import (  # noqa: F401
    SphereCurve,
    SphereInvariants,
    sphere_frame,
    sphere_invariants_closed_form,
    sphere_invariants_from_frame,
    validate_sphere_curve,
)
from .correspondence import (  # noqa: F401
    SignCalibration,
    calibrate,
    lift_arclength,
    lift_standard,
    match_invariants,
    project,
)
from .hamiltonian_flows import (  # noqa: F401
    FlowCoefficients,
    PoissonTensor,
    hamiltonian_h,
    kdv_rhs,
    make_P,
    make_P_general,
    make_Q0,
)
from .evolution_engine import (  # noqa: F401
    KdvStepper,
    Monodromy,
    Trajectory,
    monodromy,
    reconstruct_curve,
    run_realization_experiment,
    step_curve_flow,
    step_kdv,
    step_sphere_flow,
)
from .serialization import RunConfig  # noqa: F401
from .verification import run_suite  # noqa: F401
