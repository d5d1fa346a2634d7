"""Nested comparison methods: HSDM, Dinkelbach's parametric method, Halpern."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ._validation import check_finite, check_vector
from .exceptions import MisuseError
from .functions import combination, ratio_value, subgradient, value
from .solvers import SolverState, drive


@dataclass(frozen=True)
class ThetaScaledAlpha:
    """Inner step ``scale / (1 + theta)``, constant within an inner loop."""

    scale: float = 3e-6

    def __call__(self, j, theta):
        return self.scale / (1.0 + theta)


@dataclass(frozen=True)
class InnerLoopConfig:
    """Inner-solver settings for nested baselines.

    Parameters
    ----------
    inner_iters : int
        HSDM steps per outer iteration.
    alpha_rule : callable
        ``(j, theta_n) -> alpha_j``.
    exact_solver : callable, optional
        ``(phi, T, x) -> argmin_{Fix T} phi``; replaces HSDM when given.
    """

    inner_iters: int = 10
    alpha_rule: object = ThetaScaledAlpha()
    exact_solver: object = None

    def __post_init__(self):
        if self.inner_iters < 1:
            raise MisuseError("inner_iters must be >= 1")


def _as_schedule(s):
    if callable(s):
        return s
    c = float(s)
    return lambda j: c


def hsdm_run(T, phi, u1, alphas, iters):
    """Hybrid steepest descent: ``u^{j+1} = T u^j - alpha_j phi'(T u^j)``.

    ``alphas`` is a callable ``j -> alpha_j`` (``j`` from 1) or a constant.
    Returns ``u^{iters+1}``.
    """
    alphas = _as_schedule(alphas)
    u = check_vector(u1, "u1", dim=T.dim)
    for j in range(1, iters + 1):
        tu = T.apply(u)
        g = check_finite(subgradient(phi, tu), "HSDM subgradient")
        u = tu - alphas(j) * g
    return u


def halpern_project(T, z, lambdas=None, iters=10_000, u1=None):
    """Anchored iteration ``u^{s+1} = lam_s z + (1 - lam_s) T u^s``.

    With ``lam_s = 1/(s+1)`` (the default) and nonexpansive ``T`` this tends
    to the projection of ``z`` onto ``Fix T``.
    """
    z = check_vector(z, "z", dim=T.dim)
    lambdas = (lambda s: 1.0 / (s + 1)) if lambdas is None else _as_schedule(lambdas)
    u = z.copy() if u1 is None else check_vector(u1, "u1", dim=T.dim)
    for s in range(1, iters + 1):
        lam = lambdas(s)
        if not 0 < lam <= 1:
            raise MisuseError(f"lambda_{s} = {lam!r} outside (0, 1]")
        u = lam * z + (1.0 - lam) * T.apply(u)
    return u


def interval_solver(phi, T, x):
    """Exact minimizer of a 1-D convex ``phi`` over a 1-D box operator's set."""
    if T.kind != "box_projection" or T.dim != 1:
        raise MisuseError("interval_solver needs a 1-D box projection")
    lo, hi = float(T.params["lo"][0]), float(T.params["hi"][0])

    def f(t):
        return value(phi, np.array([t]))

    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    cands = [lo, hi, float(res.x)]
    return np.array([min(cands, key=f)])


def dinkelbach_run(p, x1, cfg=None, outer_stop="iters:100", **kwargs):
    """Dinkelbach's method with an inner solve of ``min_{Fix T} f - theta_n g``.

    The inner problem is warm-started from the current iterate and solved by
    ``cfg.inner_iters`` HSDM steps, or exactly by ``cfg.exact_solver``.
    """
    cfg = InnerLoopConfig() if cfg is None else cfg

    def step(prog, state, _eta):
        theta = state.theta
        phi = combination([(1.0, prog.numerator), (-theta, prog.denominator)])
        if cfg.exact_solver is not None:
            x_new = np.asarray(cfg.exact_solver(phi, prog.operator, state.x), dtype=float)
        else:
            x_new = hsdm_run(
                prog.operator, phi, state.x,
                lambda j: cfg.alpha_rule(j, theta), cfg.inner_iters,
            )
        theta_new = ratio_value(prog, x_new)
        return SolverState(state.n + 1, x_new, theta_new, min(state.best_theta, theta_new))

    config = {"inner_iters": cfg.inner_iters, "inner": "exact" if cfg.exact_solver else "hsdm"}
    return drive(step, p, x1, None, outer_stop, method="dinkelbach", config=config, **kwargs)


__all__ = [
    "InnerLoopConfig", "ThetaScaledAlpha", "hsdm_run", "halpern_project",
    "interval_solver", "dinkelbach_run",
]
