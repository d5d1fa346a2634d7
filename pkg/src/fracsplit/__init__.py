"""Fixed-point subgradient splitting for fractional programs over fixed-point sets.

Submodules
----------
operators     projections and operator algebra
functions     value/subgradient oracles and program containers
solvers       FSSM, AFSSM, IFSSM steps and drivers
baselines     Dinkelbach, hybrid steepest descent, Halpern iteration
problems      seeded instance generators and the instance file format
harness       experiment runner and CSV output
"""

from .baselines import InnerLoopConfig, dinkelbach_run, halpern_project, hsdm_run
from .estimators import AFSSM, FSSM, IFSSM, Dinkelbach
from .exceptions import (
    DenominatorViolationError,
    DomainError,
    FracsplitError,
    InvalidOperatorError,
    InvalidReferencePointError,
    InvalidSpecError,
    MetricDomainError,
    MisuseError,
    NonFiniteError,
    RankDeficiencyError,
)
from .functions import FractionalProgram, SubdifferentiableFunction, SumOfRatiosProgram
from .operators import FixedPointOperator
from .problems import GeneratorSpec, gen_analytic, generate, load_instance, save_instance
from .solvers import (
    RunTrace,
    SolverState,
    StepSchedule,
    StopRule,
    afssm_run,
    fssm_run,
    ifssm_run,
)

__version__ = "0.1.0"

__all__ = [
    "AFSSM", "FSSM", "IFSSM", "Dinkelbach",
    "FixedPointOperator", "SubdifferentiableFunction", "FractionalProgram",
    "SumOfRatiosProgram", "GeneratorSpec", "StepSchedule", "StopRule", "SolverState",
    "RunTrace", "InnerLoopConfig",
    "fssm_run", "afssm_run", "ifssm_run", "dinkelbach_run", "hsdm_run", "halpern_project",
    "generate", "gen_analytic", "load_instance", "save_instance",
    "FracsplitError", "InvalidOperatorError", "RankDeficiencyError", "DomainError",
    "DenominatorViolationError", "NonFiniteError", "InvalidReferencePointError",
    "MisuseError", "MetricDomainError", "InvalidSpecError",
]
