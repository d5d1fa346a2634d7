"""Value and subgradient oracles, and the fractional program containers.

Oracle convention: :func:`subgradient` returns an element of the
subdifferential for convex functions and of the superdifferential for
concave ones.  Solvers need ``h' in d(-g)`` for a concave denominator ``g``;
that is :func:`neg_subgradient`.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_matrix, check_vector
from .exceptions import DenominatorViolationError, DomainError, InvalidSpecError
from .operators import FixedPointOperator, residual

FUNCTION_KINDS = frozenset(
    {"linear", "affine", "quadratic_form", "neg_cobb_douglas", "cobb_douglas", "combination"}
)
CONVEXITY_CLASSES = frozenset({"convex", "strongly_convex", "concave"})


@dataclass(frozen=True, eq=False)
class SubdifferentiableFunction:
    """A closed-form function with a one-subgradient oracle.

    Parameters
    ----------
    kind : str
        ``linear`` (``<s,x>``), ``affine`` (``<s,x> + c``), ``quadratic_form``
        (``0.5<x,Qx> + <s,x> + c``), ``cobb_douglas`` (``a0 prod x_j^a_j``),
        ``neg_cobb_douglas`` (its negative) or ``combination``
        (``sum_i w_i f_i``).
    params : dict
        Kind-specific coefficients.
    dim : int
    convexity : str
        ``convex``, ``strongly_convex`` or ``concave``.
    sigma : float
        Strong convexity modulus; only meaningful for ``strongly_convex``.
    """

    kind: str
    params: dict
    dim: int
    convexity: str = "convex"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in FUNCTION_KINDS:
            raise InvalidSpecError(f"unknown function kind {self.kind!r}")
        if self.convexity not in CONVEXITY_CLASSES:
            raise InvalidSpecError(f"unknown convexity class {self.convexity!r}")
        if self.convexity == "strongly_convex" and not self.sigma > 0:
            raise InvalidSpecError("strongly_convex requires sigma > 0")

    @property
    def is_affine(self):
        if self.kind in ("linear", "affine"):
            return True
        if self.kind == "quadratic_form":
            return not np.any(self.params["Q"])
        if self.kind == "combination":
            return all(fn.is_affine for _, fn in self.params["terms"])
        return False

    @property
    def is_convex(self):
        return self.is_affine or self.convexity in ("convex", "strongly_convex")

    @property
    def is_concave(self):
        return self.is_affine or self.convexity == "concave"

    def __call__(self, x):
        return value(self, x)

    def value(self, x):
        return value(self, x)

    def subgradient(self, x):
        return subgradient(self, x)


def _frozen(v):
    v = np.array(v, dtype=float)
    v.setflags(write=False)
    return v


def linear(s, convexity="convex"):
    s = check_vector(s, "s")
    return SubdifferentiableFunction("linear", {"s": _frozen(s)}, s.size, convexity)


def affine(s, c, convexity="convex"):
    s = check_vector(s, "s")
    return SubdifferentiableFunction("affine", {"s": _frozen(s), "c": float(c)}, s.size, convexity)


def constant(c, dim, convexity="concave"):
    return affine(np.zeros(dim), c, convexity)


def quadratic_form(Q, s=None, c=0.0, sigma=None):
    """``0.5 <x, Qx> + <s, x> + c`` for symmetric positive semidefinite ``Q``.

    ``sigma`` defaults to the smallest eigenvalue of ``Q``; the function is
    tagged ``strongly_convex`` whenever it is positive.
    """
    Q = check_matrix(Q, "Q")
    if Q.shape[0] != Q.shape[1]:
        raise InvalidSpecError("Q must be square")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise InvalidSpecError("Q must be symmetric")
    k = Q.shape[0]
    s = np.zeros(k) if s is None else check_vector(s, "s", dim=k)
    if sigma is None:
        sigma = float(np.linalg.eigvalsh(Q)[0])
        if sigma < -1e-10 * max(1.0, np.abs(Q).max()):
            raise InvalidSpecError("Q is not positive semidefinite")
    convexity = "strongly_convex" if sigma > 0 else "convex"
    params = {"Q": _frozen(Q), "s": _frozen(s), "c": float(c)}
    return SubdifferentiableFunction("quadratic_form", params, k, convexity, max(sigma, 0.0))


def _cd_params(a0, a):
    a = check_vector(a, "a")
    if not a0 > 0 or np.any(a <= 0):
        raise InvalidSpecError("Cobb-Douglas needs a0 > 0 and positive exponents")
    if a.sum() > 1 + 1e-12:
        raise InvalidSpecError("Cobb-Douglas exponents must sum to at most 1 for concavity")
    return {"a0": float(a0), "a": _frozen(a)}, a.size


def cobb_douglas(a0, a):
    """Concave ``a0 * prod_j x_j**a_j`` on the positive orthant."""
    params, k = _cd_params(a0, a)
    return SubdifferentiableFunction("cobb_douglas", params, k, "concave")


def neg_cobb_douglas(a0, a):
    """Convex ``-a0 * prod_j x_j**a_j`` on the positive orthant."""
    params, k = _cd_params(a0, a)
    return SubdifferentiableFunction("neg_cobb_douglas", params, k, "convex")


def combination(terms):
    """``sum_i w_i f_i`` for ``terms = [(w_i, f_i), ...]``.

    Must be convex term by term: ``w_i >= 0`` on convex ``f_i`` or
    ``w_i <= 0`` on concave ``f_i``.
    """
    terms = tuple((float(w), fn) for w, fn in terms)
    if not terms:
        raise InvalidSpecError("empty combination")
    dims = {fn.dim for _, fn in terms}
    if len(dims) != 1:
        raise InvalidSpecError("combination terms differ in dimension")
    sigma = 0.0
    for w, fn in terms:
        if w == 0 or fn.is_affine:
            continue
        if w > 0 and fn.is_convex:
            sigma += w * fn.sigma
        elif not (w < 0 and fn.is_concave):
            raise InvalidSpecError("combination is not convex term by term")
    convexity = "strongly_convex" if sigma > 0 else "convex"
    return SubdifferentiableFunction("combination", {"terms": terms}, dims.pop(), convexity, sigma)


def _cd_value(p, x):
    if np.any(x <= 0):
        raise DomainError("Cobb-Douglas evaluated at a nonpositive coordinate")
    return p["a0"] * math.exp(float(p["a"] @ np.log(x)))


def value(fn, x):
    """Exact closed-form value of ``fn`` at ``x``."""
    x = np.asarray(x, dtype=float)
    p, kind = fn.params, fn.kind
    if kind == "linear":
        return float(p["s"] @ x)
    if kind == "affine":
        return float(p["s"] @ x) + p["c"]
    if kind == "quadratic_form":
        return 0.5 * float(x @ (p["Q"] @ x)) + float(p["s"] @ x) + p["c"]
    if kind == "cobb_douglas":
        return _cd_value(p, x)
    if kind == "neg_cobb_douglas":
        return -_cd_value(p, x)
    return sum(w * value(f, x) for w, f in p["terms"])


def subgradient(fn, x):
    """One (super)gradient of ``fn`` at ``x``; the gradient for smooth kinds."""
    x = np.asarray(x, dtype=float)
    p, kind = fn.params, fn.kind
    if kind in ("linear", "affine"):
        return np.array(p["s"])
    if kind == "quadratic_form":
        return p["Q"] @ x + p["s"]
    if kind in ("cobb_douglas", "neg_cobb_douglas"):
        grad = _cd_value(p, x) * p["a"] / x
        return grad if kind == "cobb_douglas" else -grad
    out = np.zeros(fn.dim)
    for w, f in p["terms"]:
        out += w * subgradient(f, x)
    return out


def neg_subgradient(fn, x):
    """Subgradient of ``-fn`` at ``x`` (``h'`` for a concave denominator)."""
    return -subgradient(fn, x)


@dataclass(frozen=True, eq=False)
class FractionalProgram:
    """Minimize ``f(x)/g(x)`` over ``Fix T``.

    Parameters
    ----------
    numerator : SubdifferentiableFunction
        Convex, nonnegative on the image of ``operator``.
    denominator : SubdifferentiableFunction
        Concave, positive and at most ``denom_upper_bound`` on that image.
    operator : FixedPointOperator
    denom_upper_bound : float or None
        Bound ``M``; metadata only.
    feasibility : tuple or None
        ``("linear_residual", A, b)``, ``("halfspace_fe", B, q_lo, q_hi)`` or
        ``None`` for the fixed-point residual.
    metadata : dict
        Free-form extras (known optimum, generator blocks, variants).
    """

    numerator: SubdifferentiableFunction
    denominator: SubdifferentiableFunction
    operator: FixedPointOperator
    denom_upper_bound: float = None
    feasibility_spec: tuple = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.numerator.is_convex:
            raise InvalidSpecError("numerator must be convex")
        if not self.denominator.is_concave:
            raise InvalidSpecError("denominator must be concave")
        dims = {self.numerator.dim, self.denominator.dim, self.operator.dim}
        if len(dims) != 1:
            raise InvalidSpecError(f"dimension mismatch: {sorted(dims)}")

    @property
    def dim(self):
        return self.operator.dim

    def ratio(self, x):
        return ratio_value(self, x)

    def feasibility(self, x):
        return feasibility(self.feasibility_spec, [self.operator], x)

    def with_operator(self, operator):
        return replace(self, operator=operator)


@dataclass(frozen=True, eq=False)
class SumOfRatiosProgram:
    """Minimize ``sum_i f_i(x)/g_i(x)`` over the intersection of ``Fix T_i``."""

    numerators: tuple
    denominators: tuple
    operators: tuple
    denom_bounds: tuple = None
    feasibility_spec: tuple = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.numerators)
        if m < 1 or len(self.denominators) != m or len(self.operators) != m:
            raise InvalidSpecError("need m >= 1 numerators, denominators and operators")
        for f, g in zip(self.numerators, self.denominators):
            if not f.is_convex or not g.is_concave:
                raise InvalidSpecError("numerators must be convex and denominators concave")
        dims = {fn.dim for fn in self.numerators + self.denominators}
        dims |= {op.dim for op in self.operators}
        if len(dims) != 1:
            raise InvalidSpecError(f"dimension mismatch: {sorted(dims)}")
        if self.denom_bounds is not None:
            N, M = self.denom_bounds
            if not 0 < N <= M:
                raise InvalidSpecError("denominator bounds need 0 < N <= M")
            if m + N > M:
                warnings.warn(
                    f"denominator bounds violate m + N <= M (m={m}, N={N}, M={M})",
                    stacklevel=2,
                )

    @property
    def m(self):
        return len(self.numerators)

    @property
    def dim(self):
        return self.operators[0].dim

    def ratio(self, x):
        return sum_ratio_value(self, x)

    def feasibility(self, x):
        return feasibility(self.feasibility_spec, self.operators, x)

    @classmethod
    def from_fractional(cls, p, operators=None):
        """Wrap ``p`` as a sum of ratios, padding extra components with ``0/1``.

        With ``operators=None`` this is the one-term program ``(f, g, T)``.
        """
        ops = (p.operator,) if operators is None else tuple(operators)
        nums = [p.numerator] + [linear(np.zeros(p.dim))] * (len(ops) - 1)
        dens = [p.denominator] + [constant(1.0, p.dim)] * (len(ops) - 1)
        return cls(tuple(nums), tuple(dens), ops, None, p.feasibility_spec, dict(p.metadata))


def feasibility(spec, operators, x):
    """Problem-specific feasibility measure; see :class:`FractionalProgram`."""
    x = np.asarray(x, dtype=float)
    if spec is None:
        return max(residual(T, x) for T in operators)
    tag = spec[0]
    if tag == "linear_residual":
        _, A, b = spec
        return float(np.linalg.norm(A @ x - b))
    if tag == "halfspace_fe":
        _, B, q_lo, q_hi = spec
        Bx = B @ x
        p = B.shape[0]
        return float(
            (np.maximum(q_lo - Bx, 0.0).sum() + np.maximum(Bx - q_hi, 0.0).sum()) / (2 * p)
        )
    raise InvalidSpecError(f"unknown feasibility measure {tag!r}")


def ratio_value(p, x):
    """``theta = f(x)/g(x)``; raises if ``g(x) <= 0``."""
    gx = value(p.denominator, x)
    if not gx > 0:
        raise DenominatorViolationError(np.array(x, dtype=float), gx)
    return value(p.numerator, x) / gx


def ratio_terms(p, x):
    """Per-component ratios ``f_i(x)/g_i(x)`` of a sum-of-ratios program."""
    out = np.empty(p.m)
    for i, (f, g) in enumerate(zip(p.numerators, p.denominators)):
        gx = value(g, x)
        if not gx > 0:
            raise DenominatorViolationError(np.array(x, dtype=float), gx, component=i)
        out[i] = value(f, x) / gx
    return out


def sum_ratio_value(p, x):
    """``F(x) = sum_i f_i(x)/g_i(x)``."""
    return sum(ratio_terms(p, x).tolist())
