"""Numerical checks of exponential trichotomy for evolution operators on R^n."""

__version__ = "0.1.0"

from .analysis import (
    Classification,
    NormalizedConstants,
    ParetoCurve,
    TrichotomyConstants,
    classify,
    estimate_envelope,
    normalize_constants,
    triple_envelopes,
    verify_pair_conditions,
    verify_quad_conditions,
    verify_trichotomy,
)
from .errors import (
    CommutationError,
    DimensionError,
    EvaluationError,
    IncompatibleFamilyError,
    ScenarioError,
    SemigroupLawError,
    TrichotomyError,
)
from .grid import SampleGrid, TimePair, TimeTriple
from .norms import NormKind
from .operators import (
    DiagonalIntegrand,
    EvolutionOperator,
    IntegralOfPhi,
    LinearRate,
    Restricted,
    ScalarQuotient,
    SemigroupInduced,
    UserSupplied,
    check_evolution_property,
    diagonal_example_operator,
    make_diagonal_integrand,
    make_scalar_quotient,
    make_semigroup_induced,
)
from .projections import (
    ConstantCoordinate,
    ConstantMatrix,
    FamilyPair,
    FamilyQuad,
    FamilyTriple,
    Identity,
    UserProjection,
    Zero,
    check_compat,
    check_compat2,
    check_compat3,
    check_compat4,
    check_idempotent,
    restrict,
)
from .report import ComplianceReport, ConditionResult
from .scenario import Scenario, load_scenario, parse_scenario
from .transforms import (
    convert,
    pair_to_triple,
    quad_to_triple,
    triple_to_pair,
    triple_to_quad,
    verify_transport,
)
