"""Seeded instance generators and a replayable plain-text instance format.

Random families draw every coefficient block from its own PCG64 stream,
keyed by ``(seed, crc32(block name))``, so adding a block never perturbs the
others.  Generation is split into drawing blocks and building a program from
blocks; the instance file stores the blocks, so loading replays exactly.
"""

import functools
import logging
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import functions as fn
from . import operators as ops
from .exceptions import InvalidSpecError, RankDeficiencyError
from .functions import FractionalProgram, SumOfRatiosProgram

logger = logging.getLogger(__name__)

FAMILIES = ("quadratic_linear", "cobb_douglas", "sum_linear_ratios",
            "analytic_1d", "analytic_2d")
ANALYTIC_TAGS = ("quad_over_one_1d", "quad_over_x_1d", "ratio_2d_grid")
FORMAT_HEADER = "fracsplit-instance 1"
BOX_LO, BOX_HI = 1e-8, 1e8
FSP_BOX_HI = 100.0
GRID_STEP = 1e-3


@dataclass(frozen=True)
class GeneratorSpec:
    """Family name, dimensions and seed identifying one instance.

    ``dims`` holds the applicable subset of ``k``, ``m``, ``p``; the analytic
    families use ``dims={"which": tag}`` instead.
    """

    family: str
    dims: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"unknown family {self.family!r}")
        for key, v in self.dims.items():
            if key != "which" and not (isinstance(v, (int, np.integer)) and v > 0):
                raise InvalidSpecError(f"dimension {key}={v!r} must be a positive integer")
        if self.family == "quadratic_linear" and self.dims["m"] >= self.dims["k"]:
            raise InvalidSpecError("quadratic_linear needs m < k (underdetermined system)")


def block_rng(seed, name):
    """Independent generator for one named coefficient block."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())])
    return np.random.Generator(np.random.PCG64(ss))


def open_uniform(rng, lo, hi, size):
    """Uniform draws strictly inside ``(lo, hi)``."""
    out = rng.uniform(lo, hi, size)
    bad = (out <= lo) | (out >= hi)
    while np.any(bad):
        out[bad] = rng.uniform(lo, hi, int(bad.sum()))
        bad = (out <= lo) | (out >= hi)
    return out


def _draw(seed, name, lo, hi, size):
    return open_uniform(block_rng(seed, name), lo, hi, size)


# --- quadratic over linear, underdetermined equality constraints ----------


def draw_quadratic_linear(k, m, seed):
    return {
        "P": _draw(seed, "P", 0.0, 1.0, (k, k)),
        "s": _draw(seed, "s", 0.0, 1.0, k),
        "b": _draw(seed, "b", 0.0, 1.0, m),
        "A": _draw(seed, "A", 0.0, 1.0, (m, k)),
    }


def build_quadratic_linear(blocks, spec):
    P, s, b, A = blocks["P"], blocks["s"], blocks["b"], blocks["A"]
    k = P.shape[0]
    G = P.T @ P
    Q = 0.5 * (G + G.T) + k * np.eye(k)
    T = ops.compose([ops.affine(A, b), ops.box(BOX_LO, BOX_HI, dim=k)])
    return FractionalProgram(
        fn.quadratic_form(Q, sigma=float(k)),
        fn.linear(s, convexity="concave"),
        T,
        denom_upper_bound=float(s.sum() * BOX_HI),
        feasibility_spec=("linear_residual", A, b),
        metadata={"spec": spec, "blocks": blocks, "x0": np.full(k, 0.1)},
    )


def gen_quadratic_linear(k, m, seed):
    """Quadratic-over-linear ratio on ``{Ax = b} cap [1e-8, 1e8]^k``.

    A singular ``A A^T`` triggers regeneration with ``seed + 1``.
    """
    spec = GeneratorSpec("quadratic_linear", {"k": k, "m": m}, seed)
    while True:
        try:
            return build_quadratic_linear(draw_quadratic_linear(k, m, spec.seed), spec)
        except RankDeficiencyError:
            logger.warning("singular A A^T for seed %d; regenerating with seed %d",
                           spec.seed, spec.seed + 1)
            spec = GeneratorSpec(spec.family, spec.dims, spec.seed + 1)


# --- cost over Cobb-Douglas profit, funding-level constraints -------------


def draw_cobb_douglas(k, p, seed):
    a_raw = _draw(seed, "a", 0.0, float(k), k)
    B = _draw(seed, "B", 0.0, 1.0, (p, k))
    norms = np.linalg.norm(B, axis=1)
    return {
        "c": _draw(seed, "c", 0.0, float(k), k),
        "a": a_raw / a_raw.sum(),
        "c0": _draw(seed, "c0", 1.0, 10.0, 1),
        "a0": _draw(seed, "a0", 1.0, 10.0, 1),
        "B": B,
        "q_lo": norms * _draw(seed, "q_lo", 0.0, 25.0, p),
        "q_hi": norms * _draw(seed, "q_hi", 75.0, 100.0, p),
    }


def build_cobb_douglas(blocks, spec):
    c, a, B = blocks["c"], blocks["a"], blocks["B"]
    c0, a0 = float(blocks["c0"][0]), float(blocks["a0"][0])
    q_lo, q_hi = blocks["q_lo"], blocks["q_hi"]
    k = c.size
    lower = [ops.halfspace(-bl, -q) for bl, q in zip(B, q_lo)]
    upper = [ops.halfspace(bl, q) for bl, q in zip(B, q_hi)]
    bx = ops.box(BOX_LO, BOX_HI, dim=k)
    cyclic = ops.compose(lower + upper + [bx])
    simultaneous = ops.compose([ops.average(lower + upper), bx])
    return FractionalProgram(
        fn.affine(c, c0),
        fn.cobb_douglas(a0, a),
        cyclic,
        denom_upper_bound=a0 * BOX_HI,
        feasibility_spec=("halfspace_fe", B, q_lo, q_hi),
        metadata={
            "spec": spec, "blocks": blocks, "x0": np.ones(k),
            "operators": {"cyclic": cyclic, "simultaneous": simultaneous},
        },
    )


def gen_cobb_douglas(k, p, seed):
    """Cost over Cobb-Douglas profit with ``2p`` funding halfspaces and a box.

    The default operator is the cyclic composition; the simultaneous variant
    is in ``metadata["operators"]["simultaneous"]``.
    """
    spec = GeneratorSpec("cobb_douglas", {"k": k, "p": p}, seed)
    return build_cobb_douglas(draw_cobb_douglas(k, p, seed), spec)


# --- sum of linear ratios ---------------------------------------------------


def draw_sum_linear_ratios(k, m, p, seed):
    return {
        "C": _draw(seed, "C", 0.1, 10.0, (m, k)),
        "D": _draw(seed, "D", 0.1, 10.0, (m, k)),
        "r": _draw(seed, "r", 0.0, 1.0, m),
        "s": _draw(seed, "s", 0.0, 1.0, m),
        "A": _draw(seed, "A", -10.0, 10.0, (p, k)),
        "b": _draw(seed, "b", 0.0, 10.0, p),
    }


def build_sum_linear_ratios(blocks, spec):
    """Pad to ``max(m, p+1)`` terms: zero numerators over ``1``, or identities."""
    C, D, r, s, A, b = (blocks[key] for key in ("C", "D", "r", "s", "A", "b"))
    m, k = C.shape
    p = A.shape[0]
    n_terms = max(m, p + 1)
    nums = [fn.affine(C[i], r[i]) for i in range(m)]
    dens = [fn.affine(D[i], s[i], convexity="concave") for i in range(m)]
    nums += [fn.linear(np.zeros(k))] * (n_terms - m)
    dens += [fn.constant(1.0, k)] * (n_terms - m)
    operators = [ops.halfspace(A[l], b[l]) for l in range(p)]
    operators.append(ops.box(0.0, FSP_BOX_HI, dim=k))
    operators += [ops.identity(k)] * (n_terms - p - 1)
    # linear denominators: interval bounds over the box are exact
    lows = list(s) + [1.0] * (n_terms - m)
    highs = list(FSP_BOX_HI * D.sum(axis=1) + s) + [1.0] * (n_terms - m)
    return SumOfRatiosProgram(
        tuple(nums), tuple(dens), tuple(operators),
        denom_bounds=(float(min(lows)), float(max(highs))),
        metadata={"spec": spec, "blocks": blocks, "x0": np.ones(k), "m_orig": m},
    )


def gen_sum_linear_ratios(k, m, p, seed):
    """Sum of ``m`` affine-over-affine ratios over ``p`` halfspaces and ``[0,100]^k``."""
    spec = GeneratorSpec("sum_linear_ratios", {"k": k, "m": m, "p": p}, seed)
    return build_sum_linear_ratios(draw_sum_linear_ratios(k, m, p, seed), spec)


# --- analytic oracle instances ---------------------------------------------


@functools.lru_cache(maxsize=None)
def _ratio_2d_grid_optimum():
    t = np.linspace(0.0, 2.0, int(round(2.0 / GRID_STEP)) + 1)
    best = (np.inf, None)
    for x1 in t:
        x2 = t[x1 + t <= 2.0 + 1e-12]
        vals = ((x1 - 2) ** 2 + (x2 - 2) ** 2 + 0.5) / (x1 + 0.5 * x2 + 1.0)
        j = int(np.argmin(vals))
        if vals[j] < best[0]:
            best = (float(vals[j]), (float(x1), float(x2[j])))
    return best


def gen_analytic(which):
    """Hand-built instances with known optimum ``metadata["x_star"]``/``["theta_star"]``.

    * ``quad_over_one_1d``: ``x^2 / 1`` on ``[1, 2]``; optimum ``(1, 1)``.
    * ``quad_over_x_1d``: ``x^2 / x`` on ``[1, 2]``; optimum ``(1, 1)``.
    * ``ratio_2d_grid``: ``((x1-2)^2 + (x2-2)^2 + 0.5) / (x1 + x2/2 + 1)`` on
      ``{x1 + x2 <= 2} cap [0, 2]^2``; optimum located by a ``1e-3`` grid.
    """
    if which == "quad_over_one_1d":
        f = fn.quadratic_form([[2.0]])
        g = fn.constant(1.0, 1)
        T = ops.box([1.0], [2.0])
        meta = {"x_star": np.array([1.0]), "theta_star": 1.0, "x0": np.array([3.0])}
        return FractionalProgram(f, g, T, 1.0, metadata=meta | {"which": which})
    if which == "quad_over_x_1d":
        f = fn.quadratic_form([[2.0]])
        g = fn.linear([1.0], convexity="concave")
        T = ops.box([1.0], [2.0])
        meta = {"x_star": np.array([1.0]), "theta_star": 1.0, "x0": np.array([2.0])}
        return FractionalProgram(f, g, T, 2.0, metadata=meta | {"which": which})
    if which == "ratio_2d_grid":
        f = fn.quadratic_form(2.0 * np.eye(2), s=[-4.0, -4.0], c=8.5)
        g = fn.affine([1.0, 0.5], 1.0, convexity="concave")
        parts = (ops.halfspace([1.0, 1.0], 2.0), ops.box(0.0, 2.0, dim=2))
        theta_star, x_star = _ratio_2d_grid_optimum()
        meta = {"x_star": np.array(x_star), "theta_star": theta_star,
                "x0": np.array([0.0, 0.0]), "component_operators": parts,
                "grid_step": GRID_STEP, "which": which}
        return FractionalProgram(f, g, ops.compose(list(parts)), 4.0, metadata=meta)
    raise InvalidSpecError(f"unknown analytic instance {which!r}; choose from {ANALYTIC_TAGS}")


# --- dispatch and serialization ---------------------------------------------

_BUILDERS = {
    "quadratic_linear": build_quadratic_linear,
    "cobb_douglas": build_cobb_douglas,
    "sum_linear_ratios": build_sum_linear_ratios,
}


def generate(spec):
    """Instance for a :class:`GeneratorSpec`."""
    d = spec.dims
    if spec.family == "quadratic_linear":
        return gen_quadratic_linear(d["k"], d["m"], spec.seed)
    if spec.family == "cobb_douglas":
        return gen_cobb_douglas(d["k"], d["p"], spec.seed)
    if spec.family == "sum_linear_ratios":
        return gen_sum_linear_ratios(d["k"], d["m"], d["p"], spec.seed)
    return gen_analytic(d["which"])


def _fmt(values):
    return " ".join(repr(float(v)) for v in values)


def dumps_instance(program):
    """Serialize the generator spec and coefficient blocks of ``program``."""
    spec = program.metadata["spec"] if "spec" in program.metadata else None
    if spec is None:
        which = program.metadata["which"]
        fam = "analytic_2d" if which.endswith("2d_grid") else "analytic_1d"
        spec = GeneratorSpec(fam, {"which": which}, 0)
    lines = [FORMAT_HEADER, f"family {spec.family}",
             "dims " + " ".join(f"{k}={v}" for k, v in spec.dims.items()),
             f"seed {spec.seed}"]
    for name, arr in program.metadata.get("blocks", {}).items():
        arr = np.asarray(arr, dtype=float)
        lines.append(f"block {name} " + " ".join(str(n) for n in arr.shape))
        rows = arr.reshape(1, -1) if arr.ndim == 1 else arr
        lines.extend(_fmt(row) for row in rows)
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_instance(program, path):
    with open(path, "w") as fh:
        fh.write(dumps_instance(program))


def loads_instance(text):
    """Rebuild a program from :func:`dumps_instance` output."""
    lines = iter(text.splitlines())
    if next(lines, None) != FORMAT_HEADER:
        raise InvalidSpecError("not a fracsplit instance file (bad header)")
    header = {}
    for key in ("family", "dims", "seed"):
        tag, _, rest = next(lines, "").partition(" ")
        if tag != key:
            raise InvalidSpecError(f"expected {key!r} line, got {tag!r}")
        header[key] = rest
    dims = {}
    for item in header["dims"].split():
        k, _, v = item.partition("=")
        dims[k] = v if k == "which" else int(v)
    spec = GeneratorSpec(header["family"], dims, int(header["seed"]))
    blocks = {}
    for line in lines:
        if line == "end":
            break
        tag, name, *shape = line.split() + ["", ""]
        if tag != "block":
            raise InvalidSpecError(f"unexpected line {line[:40]!r}")
        try:
            shape = tuple(int(n) for n in shape if n)
            nrows = 1 if len(shape) == 1 else shape[0]
            data = [float(v) for _ in range(nrows) for v in next(lines).split()]
            blocks[name] = np.array(data).reshape(shape)
        except (ValueError, StopIteration) as exc:
            raise InvalidSpecError(f"malformed block {name!r}") from exc
    else:
        raise InvalidSpecError("instance file truncated (missing 'end')")
    if spec.family in _BUILDERS:
        return _BUILDERS[spec.family](blocks, spec)
    return gen_analytic(dims["which"])


def load_instance(path):
    with open(path) as fh:
        return loads_instance(fh.read())


def identity_terms_first(program):
    """Reorder a sum-of-ratios program so identity-operator terms are swept first.

    The sum is order-independent, but with identity padding last (the
    default) the final inner steps are unprojected and may leave the region
    where the denominators are positive.  Sweeping them first makes every
    sweep end with the box projection.
    """
    order = sorted(range(program.m), key=lambda i: program.operators[i].kind != "identity")

    def pick(seq):
        return tuple(seq[i] for i in order)

    return SumOfRatiosProgram(
        pick(program.numerators), pick(program.denominators), pick(program.operators),
        program.denom_bounds, program.feasibility_spec,
        dict(program.metadata, identity_first=True),
    )
