"""Estimator-style wrappers: configure in ``__init__``, solve in ``fit``.

The solvers follow the scikit-learn parameter conventions (``get_params`` /
``set_params`` / ``clone``) so they can be swept with standard tooling.  The
"data" passed to ``fit`` is a program instance rather than a sample matrix.
"""

from sklearn.base import BaseEstimator

from ._validation import check_vector
from .baselines import InnerLoopConfig, ThetaScaledAlpha, dinkelbach_run
from .exceptions import MisuseError
from .functions import FractionalProgram, SumOfRatiosProgram
from .solvers import StepSchedule, StopRule, afssm_run, fssm_run, ifssm_run


class _SplittingSolver(BaseEstimator):
    _program_type = FractionalProgram
    _run = None

    def __init__(self, step="harmonic:0.1", stop="iters:1000", record_iterates=None):
        self.step = step
        self.stop = stop
        self.record_iterates = record_iterates

    def _check_program(self, problem):
        if not isinstance(problem, self._program_type):
            raise MisuseError(
                f"{type(self).__name__} needs a {self._program_type.__name__}, "
                f"got {type(problem).__name__}"
            )

    def _x0(self, problem, x0):
        if x0 is None:
            if "x0" not in problem.metadata:
                raise MisuseError("no x0 given and the program has no default start")
            x0 = problem.metadata["x0"]
        return check_vector(x0, "x0", dim=problem.dim)

    def _store(self, state, trace):
        self.x_ = state.x
        self.theta_ = state.theta
        self.best_theta_ = state.best_theta
        self.n_iter_ = len(trace)
        self.trace_ = trace
        self.status_ = trace.status
        return self

    def fit(self, problem, x0=None):
        """Solve ``problem`` from ``x0`` (default: ``problem.metadata["x0"]``)."""
        self._check_program(problem)
        state, trace = type(self)._run(
            problem, self._x0(problem, x0), StepSchedule.parse(self.step),
            StopRule.parse(self.stop), record_iterates=self.record_iterates,
        )
        return self._store(state, trace)

    def objective(self, problem, x=None):
        """Ratio value of ``problem`` at ``x`` (default: the fitted iterate)."""
        from .solvers import ratio_at

        return ratio_at(problem, self.x_ if x is None else x)


class FSSM(_SplittingSolver):
    """Fixed-point subgradient splitting.

    Parameters
    ----------
    step : str, float or StepSchedule
        ``"const:C"``, ``"harmonic:C"``, ``"power:C,P"``; a float means constant.
    stop : str or StopRule
        E.g. ``"iters:1000,time:2"``.
    record_iterates : bool, optional
        Keep every iterate in ``trace_``; defaults to ``dim <= 100``.

    Attributes
    ----------
    x_, theta_, best_theta_, n_iter_, trace_, status_
    """

    _run = staticmethod(fssm_run)


class AFSSM(_SplittingSolver):
    """Normalized-direction variant of :class:`FSSM`; same parameters."""

    _run = staticmethod(afssm_run)


class IFSSM(_SplittingSolver):
    """Incremental variant for :class:`SumOfRatiosProgram` instances."""

    _program_type = SumOfRatiosProgram
    _run = staticmethod(ifssm_run)


class Dinkelbach(_SplittingSolver):
    """Dinkelbach's method with HSDM inner solves (``alpha = scale/(1+theta)``)."""

    def __init__(self, inner_iters=10, alpha_scale=3e-6, stop="iters:100", exact_solver=None):
        self.inner_iters = inner_iters
        self.alpha_scale = alpha_scale
        self.stop = stop
        self.exact_solver = exact_solver

    def fit(self, problem, x0=None):
        self._check_program(problem)
        cfg = InnerLoopConfig(self.inner_iters, ThetaScaledAlpha(self.alpha_scale),
                              self.exact_solver)
        state, trace = dinkelbach_run(problem, self._x0(problem, x0), cfg, self.stop)
        return self._store(state, trace)
