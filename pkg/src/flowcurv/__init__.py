"""Flow-curvature analysis of 2-D and 3-D autonomous dynamical systems.

The curvature of trajectory curves of a smooth vector field packs into
a single scalar: m2 = det[V, gamma] in the plane (the numerator of the
signed curvature) and m3 = jerk . (gamma x V) in space (the numerator
of the torsion).  Zero sets of these scalars are candidate invariant
manifolds in the sense of Darboux: L_X m = k m + correction, with the
correction expressible in closed form from the field's derivative
tensors.  This package evaluates the scalars and their Lie derivatives
exactly (truncated Taylor jets, no finite differencing), checks the
invariance identities pointwise, integrates trajectories, and extracts
the zero sets as polylines or triangle meshes.

Everything symbolic enters through small model texts::

    from flowcurv import builtin, manifold_scalar
    field = builtin("vdp", {"eps": 0.05})
    manifold_scalar(field, [1.0, 1.0])

The `flowcurv` command exposes the same machinery for shell use.
"""

from .errors import (
    ConvergenceError,
    DivergenceError,
    EvaluationDomainError,
    FieldOverflowError,
    FlowCurvError,
    IntegrationError,
    ModelDefinitionError,
    ModelSyntaxError,
    NonAutonomousError,
    StepUnderflowError,
    UndeclaredSymbolError,
    UndefinedCurvatureError,
    UndefinedTorsionError,
    VanishingGradientError,
)
from .integrate import (
    Event,
    LimitCycle,
    Trajectory,
    find_zero_crossings,
    integrate,
    limit_cycle,
)
from .kinematics import (
    DerivativeTensors,
    KinematicsBundle,
    derivatives,
    flow_jet,
    kinematics_at,
    kinematics_many,
)
from .levelset import (
    LevelSet,
    ScalarGrid,
    extract_levelset,
    project_to_manifold,
    sample_grid,
)
from .manifold import (
    CurvatureResult,
    DarbouxReport,
    DarbouxResidual,
    ManifoldScalar,
    TorsionResult,
    VdpClosedForm,
    curvature,
    darboux_residual,
    invariance_report,
    lie_derivative,
    manifold_scalar,
    torsion,
    vdp_closed_form,
)
from .models import (
    BUILTIN_MODELS,
    VectorField,
    builtin,
    eval_field,
    parse_expression,
    parse_model,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_MODELS",
    "ConvergenceError",
    "CurvatureResult",
    "DarbouxReport",
    "DarbouxResidual",
    "DerivativeTensors",
    "DivergenceError",
    "EvaluationDomainError",
    "Event",
    "FieldOverflowError",
    "FlowCurvError",
    "IntegrationError",
    "KinematicsBundle",
    "LevelSet",
    "LimitCycle",
    "ManifoldScalar",
    "ModelDefinitionError",
    "ModelSyntaxError",
    "NonAutonomousError",
    "ScalarGrid",
    "StepUnderflowError",
    "Trajectory",
    "TorsionResult",
    "UndeclaredSymbolError",
    "UndefinedCurvatureError",
    "UndefinedTorsionError",
    "VanishingGradientError",
    "VdpClosedForm",
    "VectorField",
    "builtin",
    "curvature",
    "darboux_residual",
    "derivatives",
    "eval_field",
    "extract_levelset",
    "find_zero_crossings",
    "flow_jet",
    "integrate",
    "invariance_report",
    "kinematics_at",
    "kinematics_many",
    "lie_derivative",
    "limit_cycle",
    "manifold_scalar",
    "parse_expression",
    "parse_model",
    "project_to_manifold",
    "sample_grid",
    "torsion",
    "vdp_closed_form",
    "__version__",
]
