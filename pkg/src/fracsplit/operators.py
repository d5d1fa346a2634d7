"""Fixed-point operators built from closed-form metric projections.

Every operator is an immutable :class:`FixedPointOperator`.  Single metric
projections are firmly nonexpansive, hence cutters and 1-strongly
quasi-nonexpansive; composites carry a conservative modulus derived from
their constituents (exact only for single projections).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._validation import check_matrix, check_vector
from .exceptions import InvalidOperatorError, RankDeficiencyError

PROJECTION_KINDS = frozenset(
    {
        "halfspace_projection",
        "hyperplane_projection",
        "affine_projection",
        "box_projection",
        "ball_projection",
    }
)
KINDS = PROJECTION_KINDS | {"identity", "composition", "convex_combination"}

# relative pivot floor for the Cholesky factor of A A^T
PIVOT_RTOL = 1e-12


def project_halfspace(a, b, x):
    """Project ``x`` onto ``{z : <a, z> <= b}``."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    nrm2 = float(a @ a)
    if nrm2 == 0.0:
        raise InvalidOperatorError("halfspace normal vector is zero")
    excess = float(a @ x) - b
    if excess <= 0.0:
        return x.copy()
    return x - (excess / nrm2) * a


def project_hyperplane(a, b, x):
    """Project ``x`` onto ``{z : <a, z> = b}``."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    nrm2 = float(a @ a)
    if nrm2 == 0.0:
        raise InvalidOperatorError("hyperplane normal vector is zero")
    return x - ((float(a @ x) - b) / nrm2) * a


def project_box(lo, hi, x):
    """Componentwise clamp of ``x`` to ``[lo, hi]``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise InvalidOperatorError("box has lo > hi in some coordinate")
    return np.minimum(np.maximum(np.asarray(x, dtype=float), lo), hi)


def project_ball(center, radius, x):
    x = np.asarray(x, dtype=float)
    d = x - center
    nrm = float(np.linalg.norm(d))
    if nrm <= radius:
        return x.copy()
    return center + (radius / nrm) * d


def factor_gram(A):
    """Cholesky-factor ``A A^T``, rejecting near-singular systems.

    Raises
    ------
    RankDeficiencyError
        If the factorization fails or a squared pivot falls below
        ``PIVOT_RTOL`` times the largest one.
    """
    A = check_matrix(A)
    m, k = A.shape
    if m > k:
        raise RankDeficiencyError(f"affine system has more rows ({m}) than columns ({k})")
    try:
        factor = cho_factor(A @ A.T, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError("A A^T is not positive definite") from exc
    pivots = np.diag(factor[0]) ** 2
    if pivots.min() < PIVOT_RTOL * pivots.max():
        raise RankDeficiencyError(
            f"A A^T near singular (pivot ratio {pivots.min() / pivots.max():.3e})"
        )
    return factor


def project_affine(A, b, x, factor=None):
    """Project ``x`` onto ``{z : A z = b}``; ``A`` must have full row rank.

    ``factor`` is an optional precomputed result of :func:`factor_gram`.
    """
    A = check_matrix(A)
    if factor is None:
        factor = factor_gram(A)
    return _affine_step(A, np.asarray(b, dtype=float), factor, np.asarray(x, dtype=float))


def _affine_step(A, b, factor, x):
    return x - A.T @ cho_solve(factor, A @ x - b, check_finite=False)


@dataclass(frozen=True, eq=False)
class FixedPointOperator:
    """An evaluable map ``T: R^k -> R^k`` with a strong quasi-nonexpansivity tag.

    Use the module-level constructors (:func:`halfspace`, :func:`box`,
    :func:`compose`, ...) rather than instantiating directly.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    params : dict
        Kind-specific parameters.
    dim : int
        Dimension ``k`` of the space the operator acts on.
    sqne_modulus : float
        Nonnegative modulus ``rho``; 1 for single metric projections.
    """

    kind: str
    params: dict
    dim: int
    sqne_modulus: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidOperatorError(f"unknown operator kind {self.kind!r}")
        if self.sqne_modulus < 0:
            raise InvalidOperatorError("sqne_modulus must be nonnegative")

    @property
    def is_projection(self):
        return self.kind in PROJECTION_KINDS

    @property
    def is_firmly_nonexpansive(self):
        return self.is_projection or self.kind == "identity"

    def __call__(self, x):
        return self.apply(x)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise InvalidOperatorError(f"input shape {x.shape} does not match dim {self.dim}")
        kind, p = self.kind, self.params
        if kind == "identity":
            return x.copy()
        if kind == "halfspace_projection":
            return project_halfspace(p["a"], p["b"], x)
        if kind == "hyperplane_projection":
            return project_hyperplane(p["a"], p["b"], x)
        if kind == "box_projection":
            return np.minimum(np.maximum(x, p["lo"]), p["hi"])
        if kind == "ball_projection":
            return project_ball(p["center"], p["radius"], x)
        if kind == "affine_projection":
            return _affine_step(p["A"], p["b"], p["factor"], x)
        if kind == "composition":
            for op in p["ops"]:
                x = op.apply(x)
            return x
        # convex_combination
        out = np.zeros(self.dim)
        for w, op in zip(p["weights"], p["ops"]):
            out += w * op.apply(x)
        return out

    def leaves(self):
        """Flattened list of non-composite constituents."""
        if self.kind in ("composition", "convex_combination"):
            return [leaf for op in self.params["ops"] for leaf in op.leaves()]
        return [self]


def _frozen(v):
    v = np.array(v, dtype=float)
    v.setflags(write=False)
    return v


def identity(dim):
    return FixedPointOperator("identity", {}, int(dim), 1.0)


def halfspace(a, b):
    """Projection onto ``{x : <a, x> <= b}``."""
    a = check_vector(a, "a")
    if not np.any(a):
        raise InvalidOperatorError("halfspace normal vector is zero")
    return FixedPointOperator("halfspace_projection", {"a": _frozen(a), "b": float(b)}, a.size)


def hyperplane(a, b):
    a = check_vector(a, "a")
    if not np.any(a):
        raise InvalidOperatorError("hyperplane normal vector is zero")
    return FixedPointOperator("hyperplane_projection", {"a": _frozen(a), "b": float(b)}, a.size)


def box(lo, hi, dim=None):
    """Projection onto the box ``[lo, hi]``; scalar bounds need ``dim``."""
    if dim is not None:
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,))
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or lo.ndim != 1:
        raise InvalidOperatorError("box bounds must be 1-D of equal length")
    if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
        raise InvalidOperatorError("box bounds contain NaN")
    if np.any(lo > hi):
        raise InvalidOperatorError("box has lo > hi in some coordinate")
    return FixedPointOperator("box_projection", {"lo": _frozen(lo), "hi": _frozen(hi)}, lo.size)


def ball(center, radius):
    center = check_vector(center, "center")
    if not radius > 0:
        raise InvalidOperatorError("ball radius must be positive")
    return FixedPointOperator(
        "ball_projection", {"center": _frozen(center), "radius": float(radius)}, center.size
    )


def affine(A, b):
    """Projection onto ``{x : A x = b}``; ``A A^T`` is factorized once here."""
    A = check_matrix(A)
    b = check_vector(b, "b", dim=A.shape[0])
    factor = factor_gram(A)
    params = {"A": _frozen(A), "b": _frozen(b), "factor": factor}
    return FixedPointOperator("affine_projection", params, A.shape[1])


def _common_dim(ops):
    ops = list(ops)
    if not ops:
        raise InvalidOperatorError("operator list is empty")
    for op in ops:
        if not isinstance(op, FixedPointOperator):
            raise InvalidOperatorError(f"not a FixedPointOperator: {op!r}")
    dims = {op.dim for op in ops}
    if len(dims) != 1:
        raise InvalidOperatorError(f"dimension mismatch among operators: {sorted(dims)}")
    return ops, dims.pop()


def compose(ops):
    """Sequential composition; ``ops[0]`` is applied first.

    The modulus is ``(sum 1/rho_i)^-1``, a conservative positive value.
    """
    ops, dim = _common_dim(ops)
    if len(ops) == 1:
        return ops[0]
    moduli = [op.sqne_modulus for op in ops]
    rho = 0.0 if min(moduli) == 0 else 1.0 / sum(1.0 / r for r in moduli)
    return FixedPointOperator("composition", {"ops": tuple(ops)}, dim, rho)


def average(ops, weights=None, tol=1e-10):
    """Convex combination ``sum_i w_i ops_i``; uniform weights by default."""
    ops, dim = _common_dim(ops)
    if weights is None:
        weights = np.full(len(ops), 1.0 / len(ops))
    weights = check_vector(weights, "weights")
    if weights.size != len(ops):
        raise InvalidOperatorError("one weight per operator required")
    if np.any(weights <= 0):
        raise InvalidOperatorError("weights must be positive")
    if abs(weights.sum() - 1.0) > tol:
        raise InvalidOperatorError(f"weights sum to {weights.sum()!r}, not 1")
    rho = min(op.sqne_modulus for op in ops)
    return FixedPointOperator(
        "convex_combination", {"ops": tuple(ops), "weights": tuple(weights.tolist())}, dim, rho
    )


def residual(T, x):
    """Fixed-point residual ``||T x - x||``."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(T.apply(x) - x))


def cyclic_fixed_point(T, x, iters=10_000, tol=0.0):
    """Iterate ``x <- T x`` to approximate a point of ``Fix T``."""
    x = np.asarray(x, dtype=float)
    for _ in range(iters):
        nxt = T.apply(x)
        if np.linalg.norm(nxt - x) <= tol:
            return nxt
        x = nxt
    return x
