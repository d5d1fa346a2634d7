"""Relative-error and feasibility metrics logged by the solvers and harness."""

import numpy as np

from .exceptions import MetricDomainError

STOP_TOL = 1e-5


def metric_rel_obj(theta_prev, theta_next):
    """``|theta_next - theta_prev| / (theta_prev + 1)``."""
    denom = theta_prev + 1.0
    if not denom > 0:
        raise MetricDomainError(f"theta_prev + 1 = {denom!r} is not positive")
    return abs(theta_next - theta_prev) / denom


def metric_rel_iter(x_prev, x_next):
    """``||x_next - x_prev|| / (||x_prev|| + 1)``."""
    x_prev = np.asarray(x_prev, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    return float(np.linalg.norm(x_next - x_prev) / (np.linalg.norm(x_prev) + 1.0))


def metric_rel_feas_linear(A, b, x_prev, x_next):
    """Signed relative change of ``||Ax - b||``; negative when improving."""
    r_prev = float(np.linalg.norm(A @ np.asarray(x_prev, dtype=float) - b))
    r_next = float(np.linalg.norm(A @ np.asarray(x_next, dtype=float) - b))
    return (r_next - r_prev) / (r_prev + 1.0)


def metric_fe_halfspaces(bs, q_lo, q_hi, x):
    """Mean violation of the two-sided funding constraints ``q_lo <= B x <= q_hi``."""
    B = np.atleast_2d(np.asarray(bs, dtype=float))
    q_lo = np.atleast_1d(np.asarray(q_lo, dtype=float))
    q_hi = np.atleast_1d(np.asarray(q_hi, dtype=float))
    if not B.shape[0] == q_lo.size == q_hi.size:
        raise ValueError("inconsistent number of constraint rows")
    Bx = B @ np.atleast_1d(np.asarray(x, dtype=float))
    lower = np.maximum(-Bx + q_lo, 0.0).sum()
    upper = np.maximum(Bx - q_hi, 0.0).sum()
    return float((lower + upper) / (2 * B.shape[0]))


def metric_rel_feas_fe(fe_prev, fe_next):
    """Relative change of the funding feasibility error, normalized by ``FE_next + 1``."""
    return (abs(fe_next) - abs(fe_prev)) / (fe_next + 1.0)


def metric_stop_53(x_prev, x_next, F_prev, F_next, tol=STOP_TOL):
    """True when both the iterate and objective relative errors are at most ``tol``."""
    return max(metric_rel_iter(x_prev, x_next), metric_rel_obj(F_prev, F_next)) <= tol
