"""Fixed-point subgradient splitting methods and their run driver.

Three methods are provided, each as a single-step transition and a driver:

* :func:`fssm_step` / :func:`fssm_run` -- plain splitting step
  ``x+ = T(x - eta f'(x) - eta theta h'(x))`` with ``theta = f(x)/g(x)``
  and ``h' in d(-g)``.
* :func:`afssm_step` / :func:`afssm_run` -- same direction, divided by
  ``max(1, ||direction||)``.
* :func:`ifssm_step` / :func:`ifssm_run` -- incremental sweep over the terms
  of a sum of ratios, one operator per term.
"""

import csv
import math
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._validation import check_finite, check_vector
from .exceptions import InvalidSpecError, MetricDomainError, MisuseError
from .functions import neg_subgradient, ratio_terms, ratio_value, subgradient
from .metrics import metric_rel_iter, metric_rel_obj
from .operators import ball, compose, residual

TRACE_COLUMNS = ("n", "theta", "residual", "rel_obj", "rel_iter", "feas", "eta", "elapsed_s")
TIMING_COLUMNS = frozenset({"elapsed_s", "mean_time_s"})
# iterates are kept in the trace only up to this dimension unless requested
RECORD_DIM_LIMIT = 100


@dataclass(frozen=True)
class StepSchedule:
    """Step size rule ``n -> eta_n`` with ``n`` starting at 1.

    ``constant``: ``c``; ``power``: ``c/(n+1)**p``; ``harmonic``: ``c/(n+1)``.
    """

    rule: str
    c: float
    p: float = 1.0

    def __post_init__(self):
        if self.rule not in ("constant", "power", "harmonic"):
            raise InvalidSpecError(f"unknown step rule {self.rule!r}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise InvalidSpecError("step scale must be positive and finite")
        if self.rule == "power" and not self.p > 0:
            raise InvalidSpecError("power exponent must be positive")

    @classmethod
    def constant(cls, eta0):
        return cls("constant", float(eta0))

    @classmethod
    def power(cls, c, p):
        return cls("power", float(c), float(p))

    @classmethod
    def harmonic(cls, c):
        return cls("harmonic", float(c))

    @property
    def is_square_summable_divergent(self):
        """Whether ``sum eta = inf`` and ``sum eta^2 < inf`` hold by construction."""
        if self.rule == "harmonic":
            return True
        return self.rule == "power" and 0.5 < self.p <= 1.0

    def __call__(self, n):
        if self.rule == "constant":
            return self.c
        if self.rule == "harmonic":
            return self.c / (n + 1)
        return self.c / (n + 1) ** self.p

    def __str__(self):
        if self.rule == "constant":
            return f"const:{self.c!r}"
        if self.rule == "harmonic":
            return f"harmonic:{self.c!r}"
        return f"power:{self.c!r},{self.p!r}"

    @classmethod
    def parse(cls, text):
        """Parse ``const:C``, ``harmonic:C`` or ``power:C,P``."""
        if isinstance(text, StepSchedule):
            return text
        if isinstance(text, (int, float)):
            return cls.constant(text)
        rule, _, args = str(text).partition(":")
        rule = {"const": "constant"}.get(rule.strip(), rule.strip())
        try:
            nums = [float(a) for a in args.split(",") if a.strip()]
            if rule == "power":
                return cls.power(*nums)
            (c,) = nums
        except (TypeError, ValueError) as exc:
            raise InvalidSpecError(f"bad step schedule {text!r}") from exc
        return cls(rule, c)


@dataclass(frozen=True)
class StopRule:
    """Termination rules, combined by OR.

    Parameters
    ----------
    max_iters : int, optional
        Number of steps.
    wall_clock : float, optional
        Seconds of wall time.
    rel_error : float, optional
        Stop once ``max(rel_iter, rel_obj) <= rel_error``.
    residual : float, optional
        Stop once ``||T x - x|| <= residual``.
    """

    max_iters: int = None
    wall_clock: float = None
    rel_error: float = None
    residual: float = None

    def __post_init__(self):
        if all(v is None for v in (self.max_iters, self.wall_clock, self.rel_error, self.residual)):
            raise InvalidSpecError("StopRule needs at least one criterion")
        if self.max_iters is not None and self.max_iters < 0:
            raise InvalidSpecError("max_iters must be >= 0")

    def __str__(self):
        parts = []
        for key, tag in (("max_iters", "iters"), ("wall_clock", "time"),
                         ("rel_error", "rel"), ("residual", "residual")):
            v = getattr(self, key)
            if v is not None:
                parts.append(f"{tag}:{v!r}")
        return ",".join(parts)

    @classmethod
    def parse(cls, text):
        """Parse e.g. ``iters:1000,time:2`` (tags: iters, time, rel, residual)."""
        if isinstance(text, StopRule):
            return text
        keys = {"iters": "max_iters", "time": "wall_clock", "rel": "rel_error",
                "residual": "residual"}
        kwargs = {}
        for part in str(text).split(","):
            tag, _, val = part.strip().partition(":")
            if tag not in keys:
                raise InvalidSpecError(f"unknown stop criterion {tag!r}")
            kwargs[keys[tag]] = int(val) if tag == "iters" else float(val)
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class SolverState:
    """Iterate ``x^n`` with its ratio value and the last transition's by-products.

    ``pre_image`` is the point the operator was last applied to and ``eta`` the
    step that produced this state; both are ``None`` for an initial state.
    ``thetas`` holds per-term ratios for sum-of-ratios programs.
    """

    n: int
    x: np.ndarray
    theta: float
    best_theta: float
    pre_image: np.ndarray = None
    eta: float = None
    direction_sq: float = None
    thetas: np.ndarray = None
    inner_displacement: float = None


class RunTrace:
    """Per-step record of a solver run.

    Row ``n`` describes the step from ``x^n`` to ``x^{n+1}``: ``theta`` is the
    ratio at ``x^n`` used by the step, while ``residual`` and ``feas`` are
    measured at ``x^{n+1}``.
    """

    def __init__(self, config=None, x1=None, record_iterates=False):
        self.config = dict(config or {})
        self.x1 = None if x1 is None else np.array(x1, dtype=float)
        self.record_iterates = record_iterates
        self.columns = {c: [] for c in TRACE_COLUMNS}
        self.direction_sq = []
        self.iterates = []
        self.status = None

    def __len__(self):
        return len(self.columns["n"])

    def __getitem__(self, column):
        return np.asarray(self.columns[column], dtype=float)

    def append(self, row, direction_sq=None, x=None):
        for c in TRACE_COLUMNS:
            self.columns[c].append(row[c])
        self.direction_sq.append(direction_sq)
        if self.record_iterates and x is not None:
            self.iterates.append(np.array(x))

    def rows(self):
        return list(zip(*(self.columns[c] for c in TRACE_COLUMNS)))

    def max_direction_sq(self):
        """Largest ``||f'(x^n) + theta_n h'(x^n)||^2`` seen; the a-posteriori ``B``."""
        vals = [v for v in self.direction_sq if v is not None]
        return max(vals) if vals else 0.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            w.writerows(self.rows())


def initial_state(p, x1):
    """State at ``x^1`` for a fractional or sum-of-ratios program."""
    x1 = check_vector(x1, "x1", dim=p.dim)
    if hasattr(p, "operators"):
        thetas = ratio_terms(p, x1)
        theta = sum(thetas.tolist())
        return SolverState(1, x1, theta, theta, thetas=thetas)
    theta = ratio_value(p, x1)
    return SolverState(1, x1, theta, theta)


def _check_eta(eta):
    if not (eta >= 0 and math.isfinite(eta)):
        raise MisuseError(f"step size must be finite and >= 0, got {eta!r}")


def _split_direction(p, x):
    fp = check_finite(subgradient(p.numerator, x), "numerator subgradient")
    hp = check_finite(neg_subgradient(p.denominator, x), "denominator subgradient")
    return fp, hp


def fssm_step(p, state, eta):
    """One FSSM transition ``x^{n+1} = T(x^n - eta f'(x^n) - eta theta_n h'(x^n))``."""
    _check_eta(eta)
    x, theta = state.x, state.theta
    fp, hp = _split_direction(p, x)
    d = fp + theta * hp
    y = x - eta * fp - eta * theta * hp
    x_new = p.operator.apply(y)
    theta_new = ratio_value(p, x_new)
    return SolverState(
        state.n + 1, x_new, theta_new, min(state.best_theta, theta_new),
        pre_image=y, eta=eta, direction_sq=float(d @ d),
    )


def afssm_step(p, state, eta):
    """One AFSSM transition: the FSSM direction divided by ``max(1, ||d||)``.

    The displacement ``||x^n - u^n||`` therefore never exceeds ``eta``.
    """
    _check_eta(eta)
    x, theta = state.x, state.theta
    fp, hp = _split_direction(p, x)
    d = fp + theta * hp
    dsq = float(d @ d)
    u = x - eta * (d / max(1.0, math.sqrt(dsq)))
    x_new = p.operator.apply(u)
    theta_new = ratio_value(p, x_new)
    return SolverState(
        state.n + 1, x_new, theta_new, min(state.best_theta, theta_new),
        pre_image=u, eta=eta, direction_sq=dsq,
    )


def ifssm_step(p, state, eta):
    """One IFSSM outer iteration: a cyclic sweep ``i = 1..m``.

    Term ratios are taken at the outer iterate ``x^n`` (``state.thetas``)
    while subgradients are taken at the inner iterate.
    """
    _check_eta(eta)
    thetas = state.thetas if state.thetas is not None else ratio_terms(p, state.x)
    x = state.x
    disp = 0.0
    v = x
    for i in range(p.m):
        fp = check_finite(subgradient(p.numerators[i], x), "numerator subgradient")
        hp = check_finite(neg_subgradient(p.denominators[i], x), "denominator subgradient")
        v = x - eta * fp - eta * thetas[i] * hp
        x_next = p.operators[i].apply(v)
        disp += float((x_next - x) @ (x_next - x))
        x = x_next
    thetas_new = ratio_terms(p, x)
    F_new = sum(thetas_new.tolist())
    return SolverState(
        state.n + 1, x, F_new, min(state.best_theta, F_new),
        pre_image=v, eta=eta, thetas=thetas_new, inner_displacement=disp,
    )


def _residual(p, x):
    if hasattr(p, "operators"):
        return max(residual(T, x) for T in p.operators)
    return residual(p.operator, x)


def _safe_rel_obj(a, b):
    try:
        return metric_rel_obj(a, b)
    except MetricDomainError:
        return math.nan


def drive(step, p, x1, schedule, stop, *, method, record_iterates=None, config=None):
    """Run ``step`` from ``x1`` until ``stop`` fires.

    ``schedule`` may be ``None`` for methods without a step size (the trace
    then logs ``nan`` for ``eta``).  Returns ``(state, trace)``.
    """
    stop = StopRule.parse(stop)
    state = initial_state(p, x1)
    if record_iterates is None:
        record_iterates = p.dim <= RECORD_DIM_LIMIT
    echo = {"method": method, "schedule": None if schedule is None else str(schedule),
            "stop": str(stop), "dim": p.dim}
    echo.update(config or {})
    trace = RunTrace(echo, state.x, record_iterates)
    default_feas = p.feasibility_spec is None
    start = time.perf_counter()
    while True:
        if stop.max_iters is not None and state.n - 1 >= stop.max_iters:
            trace.status = "max_iters"
            break
        if stop.wall_clock is not None and time.perf_counter() - start >= stop.wall_clock:
            trace.status = "wall_clock"
            break
        eta = math.nan if schedule is None else schedule(state.n)
        new = step(p, state, eta)
        res = _residual(p, new.x)
        rel_obj = _safe_rel_obj(state.theta, new.theta)
        rel_iter = metric_rel_iter(state.x, new.x)
        row = {
            "n": state.n, "theta": state.theta, "residual": res, "rel_obj": rel_obj,
            "rel_iter": rel_iter, "feas": res if default_feas else p.feasibility(new.x),
            "eta": eta, "elapsed_s": time.perf_counter() - start,
        }
        trace.append(row, new.direction_sq, new.x)
        state = new
        if stop.rel_error is not None and max(rel_iter, rel_obj) <= stop.rel_error:
            trace.status = "rel_error"
            break
        if stop.residual is not None and res <= stop.residual:
            trace.status = "residual"
            break
    return state, trace


def fssm_run(p, x1, schedule, stop, **kwargs):
    """Run FSSM; returns ``(final_state, trace)``."""
    return drive(fssm_step, p, x1, StepSchedule.parse(schedule), stop, method="fssm", **kwargs)


def afssm_run(p, x1, schedule, stop, **kwargs):
    """Run AFSSM; warns when the numerator is not tagged strongly convex."""
    if p.numerator.convexity != "strongly_convex":
        warnings.warn("AFSSM convergence assumes a strongly convex numerator", stacklevel=2)
    return drive(afssm_step, p, x1, StepSchedule.parse(schedule), stop, method="afssm", **kwargs)


def ifssm_run(p, x1, schedule, stop, **kwargs):
    """Run IFSSM on a sum-of-ratios program; ``theta`` logs ``F(x^n)``."""
    return drive(ifssm_step, p, x1, StepSchedule.parse(schedule), stop, method="ifssm", **kwargs)


def bounded_program(p, x1, radius=None):
    """Append a projection onto a large ball to ``p``'s operator.

    The default radius ``10 * (1 + ||x1||)`` is a heuristic; the ball must
    contain a point of ``Fix T`` for the problem to be unchanged.
    """
    x1 = check_vector(x1, "x1", dim=p.dim)
    if radius is None:
        radius = 10.0 * (1.0 + float(np.linalg.norm(x1)))
    B = ball(np.zeros(p.dim), radius)
    if hasattr(p, "operators"):
        ops = list(p.operators)
        ops[-1] = compose([ops[-1], B])
        return replace(p, operators=tuple(ops))
    return p.with_operator(compose([p.operator, B]))


def ratio_at(p, x):
    """Objective value of either program type at ``x``."""
    if hasattr(p, "operators"):
        return sum(ratio_terms(p, x).tolist())
    return ratio_value(p, x)


__all__ = [
    "StepSchedule", "StopRule", "SolverState", "RunTrace", "TRACE_COLUMNS",
    "fssm_step", "fssm_run", "afssm_step", "afssm_run", "ifssm_step", "ifssm_run",
    "initial_state", "drive", "bounded_program", "ratio_at",
]
