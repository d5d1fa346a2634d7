"""Numerical certificates for the per-step inequalities behind the solvers.

Each checker returns a signed slack (right-hand side minus left-hand side);
nonnegative values certify the inequality on the examined data.
"""

import numpy as np

from .exceptions import InvalidReferencePointError, MisuseError
from .functions import subgradient, value
from .operators import residual

FIXED_POINT_TOL = 1e-9


def _check_fixed(operators, z, tol):
    for T in operators:
        r = residual(T, z)
        if r > tol * (1.0 + float(np.linalg.norm(z))):
            raise InvalidReferencePointError(f"reference point has residual {r:.3e}")


def check_descent_lemma(p, before, after, z, rho, B, tol=FIXED_POINT_TOL):
    """Slack of the per-step Fejer-type bound for FSSM.

    Evaluates::

        ||x^n - z||^2 + 2 g(z) eta (f(z)/g(z) - theta_n) + B eta^2
            - rho ||T y^n - y^n||^2 - ||x^{n+1} - z||^2

    where ``before``/``after`` are consecutive FSSM states, ``z`` is a fixed
    point of ``p.operator``, ``rho`` its SQNE modulus and ``B`` bounds
    ``||f'(x^n) + theta_n h'(x^n)||^2``.
    """
    z = np.asarray(z, dtype=float)
    _check_fixed([p.operator], z, tol)
    if after.pre_image is None or after.n != before.n + 1:
        raise MisuseError("after must be the state produced by one step from before")
    eta = after.eta
    gz = value(p.denominator, z)
    fz = value(p.numerator, z)
    y = after.pre_image
    rhs = (
        float(np.sum((before.x - z) ** 2))
        + 2.0 * gz * eta * (fz / gz - before.theta)
        + B * eta**2
        - rho * float(np.sum((after.x - y) ** 2))
    )
    return rhs - float(np.sum((after.x - z) ** 2))


def rate_bound_constant(p, trace, z, eta0, B, K):
    """Return ``(bound, gap)`` for the constant-step rate estimate.

    ``gap = min_{n<=K} theta_n - f(z)/g(z)`` and
    ``bound = ||x^1 - z||^2 / (2 g(z) eta0 K) + eta0 B / (2 g(z))``.
    """
    schedule = trace.config.get("schedule")
    if schedule is None or not schedule.startswith("const:") or float(schedule[6:]) != eta0:
        raise MisuseError(f"trace schedule {schedule!r} is not constant {eta0!r}")
    if not 1 <= K <= len(trace):
        raise MisuseError(f"K={K} outside 1..{len(trace)}")
    z = np.asarray(z, dtype=float)
    _check_fixed([p.operator], z, FIXED_POINT_TOL)
    gz = value(p.denominator, z)
    fz = value(p.numerator, z)
    best = float(np.min(trace["theta"][:K]))
    bound = float(np.sum((trace.x1 - z) ** 2)) / (2.0 * gz * eta0 * K) + eta0 * B / (2.0 * gz)
    return bound, best - fz / gz


def check_rate_bound_constant(p, trace, z, eta0, B, K):
    """Slack ``bound - gap`` of :func:`rate_bound_constant`."""
    bound, gap = rate_bound_constant(p, trace, z, eta0, B, K)
    return bound - gap


def check_incremental_descent(p, before, after, z, L, E, H, M, N, tol=FIXED_POINT_TOL):
    """Slack of the per-sweep bound for IFSSM on certifiable hand-built instances.

    Evaluates::

        ||x^n - z||^2 + 2 eta sum_i (f_i(z) - g_i(z) theta_{i,n})
            + 4M(N + 1/N)(L^2 + E^2 H^2) eta^2
            - 1/2 sum_i ||x^{i,n} - x^{i-1,n}||^2 - ||x^{n+1} - z||^2

    ``L`` and ``E`` bound the summed subgradient norms of the numerators and
    of the negated denominators, ``H`` bounds ``|theta_{i,n}|`` and
    ``0 < N <= g_i <= M`` with ``m + N <= M``.
    """
    z = np.asarray(z, dtype=float)
    _check_fixed(p.operators, z, tol)
    if after.inner_displacement is None or before.thetas is None:
        raise MisuseError("before/after must be consecutive ifssm states")
    if p.m + N > M:
        raise MisuseError("bounds violate m + N <= M")
    eta = after.eta
    gap = sum(value(f, z) - value(g, z) * t
              for f, g, t in zip(p.numerators, p.denominators, before.thetas))
    rhs = (
        float(np.sum((before.x - z) ** 2))
        + 2.0 * eta * gap
        + 4.0 * M * (N + 1.0 / N) * (L**2 + E**2 * H**2) * eta**2
        - 0.5 * after.inner_displacement
    )
    return rhs - float(np.sum((after.x - z) ** 2))


# --- property suites -------------------------------------------------------


def fne_slack(T, xs, ys):
    """Worst ``<Tx-Ty, x-y> - ||Tx-Ty||^2`` over paired samples."""
    worst = np.inf
    for x, y in zip(xs, ys):
        d = T.apply(x) - T.apply(y)
        worst = min(worst, float(d @ (x - y) - d @ d))
    return worst


def cutter_slack(T, xs, zs):
    """Worst ``-<z - Tx, x - Tx>`` over samples ``x`` and fixed points ``z``."""
    worst = np.inf
    for x in xs:
        tx = T.apply(x)
        for z in zs:
            worst = min(worst, -float((z - tx) @ (x - tx)))
    return worst


def sqne_slack(T, xs, z, rho=None):
    """Worst ``||x-z||^2 - rho||Tx-x||^2 - ||Tx-z||^2``."""
    rho = T.sqne_modulus if rho is None else rho
    worst = np.inf
    for x in xs:
        tx = T.apply(x)
        worst = min(
            worst, float((x - z) @ (x - z) - rho * (tx - x) @ (tx - x) - (tx - z) @ (tx - z))
        )
    return worst


def qne_slack(T, xs, z):
    """Worst ``||x - z|| - ||Tx - z||``."""
    return min(float(np.linalg.norm(x - z) - np.linalg.norm(T.apply(x) - z)) for x in xs)


def subgradient_slack(fn, xs, ys):
    """Worst relative slack of the (super)gradient inequality.

    For concave ``fn`` the inequality is checked on ``-fn``.
    """
    sign = -1.0 if fn.convexity == "concave" else 1.0
    worst = np.inf
    for x, y in zip(xs, ys):
        fx, fy = sign * value(fn, x), sign * value(fn, y)
        gap = fy - fx - float(sign * subgradient(fn, x) @ (y - x))
        worst = min(worst, gap / (1.0 + abs(fy)))
    return worst


def finite_difference_error(fn, xs, h=1e-6):
    """Max relative gap between the gradient oracle and central differences."""
    worst = 0.0
    for x in xs:
        g = subgradient(fn, x)
        fd = np.empty_like(g)
        for j in range(x.size):
            e = np.zeros_like(x)
            e[j] = h * max(1.0, abs(x[j]))
            fd[j] = (value(fn, x + e) - value(fn, x - e)) / (2 * e[j])
        worst = max(worst, float(np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g))))
    return worst


def strong_convexity_slack(fn, xs, ys, sigma=None):
    """Worst ``<f'(x) - f'(y), x - y> - sigma ||x - y||^2``."""
    sigma = fn.sigma if sigma is None else sigma
    worst = np.inf
    for x, y in zip(xs, ys):
        d = x - y
        worst = min(worst, float((subgradient(fn, x) - subgradient(fn, y)) @ d - sigma * d @ d))
    return worst
