"""Experiment driver: generate instances, run methods, average, write CSV.

Output layout (``cfg.out``):

* ``<family>_<method>_t<trial>.csv`` -- one trace per method and trial,
  header ``n,theta,residual,rel_obj,rel_iter,feas,eta,elapsed_s``;
* ``<family>_<method>_mean.csv`` -- trial-averaged curve, same header; aligned
  on iteration index, or on a 100-point elapsed-time grid when the stop rule
  has a wall-clock budget;
* ``<family>_summary.csv`` -- one row per method.
"""

import configparser
import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import InnerLoopConfig, ThetaScaledAlpha, dinkelbach_run
from .exceptions import FracsplitError, InvalidSpecError
from .functions import SumOfRatiosProgram, value
from .problems import GeneratorSpec, generate, identity_terms_first
from .solvers import TRACE_COLUMNS, StepSchedule, StopRule, afssm_run, fssm_run, ifssm_run

logger = logging.getLogger(__name__)

SOLVERS = ("fssm", "afssm", "ifssm", "dinkelbach")
SUMMARY_COLUMNS = ("method", "trials_ok", "trials_failed", "mean_iters", "mean_time_s",
                   "mean_final_obj", "mean_final_feas")
COST_PROFIT_COLUMNS = ("mean_cost", "mean_profit")
TIME_GRID_POINTS = 100

FAMILY_DEFAULTS = {
    "quadratic_linear": {"dims": {"k": 1000, "m": 50}, "trials": 100, "stop": "time:10",
                         "eta": "const:5.1e-05"},
    "cobb_douglas": {"dims": {"k": 500, "p": 500}, "trials": 10, "stop": "iters:10000",
                     "eta": "harmonic:0.1"},
    "sum_linear_ratios": {"dims": {"k": 5, "m": 5, "p": 10}, "trials": 10,
                          "stop": "rel:1e-05,iters:100000", "eta": "harmonic:1"},
}


@dataclass(frozen=True)
class MethodConfig:
    """One method column of an experiment.

    ``operator`` selects a variant from the instance's
    ``metadata["operators"]`` (e.g. ``cyclic``/``simultaneous``).
    """

    name: str
    solver: str
    eta: str = None
    operator: str = None
    inner_iters: int = 10
    alpha_scale: float = 3e-6

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise InvalidSpecError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.solver != "dinkelbach" and self.eta is None:
            raise InvalidSpecError(f"method {self.name!r} needs a step schedule")
        if self.eta is not None:
            StepSchedule.parse(self.eta)


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    dims: dict
    methods: tuple
    seed: int = 0
    trials: int = 1
    stop: str = "iters:1000"
    out: str = None
    workers: int = 1
    identity_first: bool = False

    def __post_init__(self):
        if self.family not in FAMILY_DEFAULTS:
            raise InvalidSpecError(f"bench supports {sorted(FAMILY_DEFAULTS)}, not {self.family!r}")
        if not self.methods:
            raise InvalidSpecError("at least one method is required")
        if self.trials < 1:
            raise InvalidSpecError("trials must be >= 1")
        if self.workers < 1:
            raise InvalidSpecError("workers must be >= 1")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise InvalidSpecError("method names must be unique")
        StopRule.parse(self.stop)
        GeneratorSpec(self.family, dict(self.dims), self.seed)
        for m in self.methods:
            if (self.family == "sum_linear_ratios") != (m.solver == "ifssm"):
                raise InvalidSpecError(
                    f"solver {m.solver!r} is not compatible with family {self.family!r}"
                )


@dataclass
class TrialResult:
    method: str
    trial: int
    trace: object = None
    x: np.ndarray = None
    theta: float = None
    feas: float = None
    cost: float = None
    profit: float = None
    error: str = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)


def _prepare(program, method, identity_first):
    if method.operator is not None:
        variants = program.metadata.get("operators", {})
        if method.operator not in variants:
            raise InvalidSpecError(f"instance has no operator variant {method.operator!r}")
        program = program.with_operator(variants[method.operator])
    if method.solver == "ifssm" and not isinstance(program, SumOfRatiosProgram):
        program = SumOfRatiosProgram.from_fractional(
            program, program.metadata.get("component_operators")
        )
    if identity_first and isinstance(program, SumOfRatiosProgram):
        program = identity_terms_first(program)
    return program


def run_method(program, method, stop, x0=None, identity_first=False):
    """Run one configured method; returns ``(final_state, trace, prepared_program)``."""
    program = _prepare(program, method, identity_first)
    x0 = program.metadata["x0"] if x0 is None else x0
    if method.solver == "dinkelbach":
        cfg = InnerLoopConfig(method.inner_iters, ThetaScaledAlpha(method.alpha_scale))
        state, trace = dinkelbach_run(program, x0, cfg, stop)
    else:
        run = {"fssm": fssm_run, "afssm": afssm_run, "ifssm": ifssm_run}[method.solver]
        state, trace = run(program, x0, method.eta, stop)
    trace.config["method_name"] = method.name
    return state, trace, program


def _run_trial(cfg, trial):
    spec = GeneratorSpec(cfg.family, dict(cfg.dims), cfg.seed + trial)
    program = generate(spec)
    out = []
    for method in cfg.methods:
        try:
            state, trace, prog = run_method(program, method, cfg.stop,
                                            identity_first=cfg.identity_first)
        except FracsplitError as exc:
            logger.warning("trial %d method %s failed: %s", trial, method.name, exc)
            out.append(TrialResult(method.name, trial, error=f"{type(exc).__name__}: {exc}"))
            continue
        res = TrialResult(method.name, trial, trace, state.x, float(state.theta),
                          float(prog.feasibility(state.x)))
        if cfg.family == "cobb_douglas":
            res.cost = value(prog.numerator, state.x)
            res.profit = value(prog.denominator, state.x)
        out.append(res)
    return out


def _mean(values):
    return math.fsum(values) / len(values) if values else math.nan


def iteration_curve(traces):
    """Average traces row by row over the trials that reached each index."""
    length = max((len(t) for t in traces), default=0)
    curve = {c: np.full(length, np.nan) for c in TRACE_COLUMNS}
    for c in TRACE_COLUMNS:
        acc = np.zeros(length)
        cnt = np.zeros(length)
        for t in traces:
            v = t[c]
            acc[: v.size] += v
            cnt[: v.size] += 1
        with np.errstate(invalid="ignore"):
            curve[c] = acc / cnt
    return curve


def time_grid_curve(traces, budget, points=TIME_GRID_POINTS):
    """Resample traces onto ``budget * j / points`` (``j = 1..points``) and average.

    Each trial contributes its last row recorded at or before the grid time.
    """
    grid = budget * np.arange(1, points + 1) / points
    curve = {c: np.zeros(points) for c in TRACE_COLUMNS}
    cnt = np.zeros(points)
    for t in traces:
        if len(t) == 0:
            continue
        idx = np.searchsorted(t["elapsed_s"], grid, side="right") - 1
        ok = idx >= 0
        cnt += ok
        for c in TRACE_COLUMNS:
            curve[c][ok] += t[c][idx[ok]]
    with np.errstate(invalid="ignore"):
        for c in TRACE_COLUMNS:
            curve[c] = curve[c] / cnt
    curve["elapsed_s"] = grid
    return curve


def aggregate(cfg, trial_results):
    """Summary rows and mean curves per method."""
    stop = StopRule.parse(cfg.stop)
    summary, curves = [], {}
    for method in cfg.methods:
        rows = [r for r in trial_results if r.method == method.name]
        ok = [r for r in rows if r.error is None]
        row = {
            "method": method.name,
            "trials_ok": len(ok),
            "trials_failed": len(rows) - len(ok),
            "mean_iters": _mean([len(r.trace) for r in ok]),
            "mean_time_s": _mean([r.trace["elapsed_s"][-1] if len(r.trace) else 0.0 for r in ok]),
            "mean_final_obj": _mean([r.theta for r in ok]),
            "mean_final_feas": _mean([r.feas for r in ok]),
        }
        if cfg.family == "cobb_douglas":
            row["mean_cost"] = _mean([r.cost for r in ok])
            row["mean_profit"] = _mean([r.profit for r in ok])
        summary.append(row)
        traces = [r.trace for r in ok]
        if stop.wall_clock is not None:
            curves[method.name] = time_grid_curve(traces, stop.wall_clock)
        else:
            curves[method.name] = iteration_curve(traces)
    return summary, curves


def write_csv(result):
    cfg = result.config
    os.makedirs(cfg.out, exist_ok=True)
    fam = cfg.family
    for r in result.trials:
        if r.error is None:
            r.trace.to_csv(os.path.join(cfg.out, f"{fam}_{r.method}_t{r.trial}.csv"))
    for name, curve in result.curves.items():
        with open(os.path.join(cfg.out, f"{fam}_{name}_mean.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            w.writerows(zip(*(curve[c].tolist() for c in TRACE_COLUMNS)))
    columns = SUMMARY_COLUMNS + (COST_PROFIT_COLUMNS if fam == "cobb_douglas" else ())
    with open(os.path.join(cfg.out, f"{fam}_summary.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, columns, lineterminator="\n")
        w.writeheader()
        w.writerows(result.summary)


def run_experiment(cfg):
    """Run every method on ``cfg.trials`` instances (seeds ``seed + trial``).

    Failed runs are excluded from the averages and counted in
    ``trials_failed``.  CSV files are written when ``cfg.out`` is set.
    """
    if cfg.workers == 1:
        per_trial = [_run_trial(cfg, t) for t in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            per_trial = list(pool.map(lambda t: _run_trial(cfg, t), range(cfg.trials)))
    trials = [r for batch in per_trial for r in batch]
    summary, curves = aggregate(cfg, trials)
    result = ExperimentResult(cfg, trials, summary, curves)
    if cfg.out:
        write_csv(result)
    return result


# --- configuration files ----------------------------------------------------


def default_methods(family):
    if family == "quadratic_linear":
        return (MethodConfig("fssm-c", "fssm", "const:5.1e-05"),
                MethodConfig("fssm-d", "fssm", "harmonic:8.9e-05"),
                MethodConfig("da", "dinkelbach"))
    if family == "cobb_douglas":
        return tuple(
            MethodConfig(f"fssm-{op[0]}-{kind[0]}", "fssm", eta, operator=op)
            for op in ("cyclic", "simultaneous")
            for kind, eta in (("c", "const:0.0002"), ("d", "harmonic:0.1"))
        )
    if family == "sum_linear_ratios":
        return (MethodConfig("ifssm", "ifssm", "harmonic:1"),)
    raise InvalidSpecError(f"no default methods for family {family!r}")


def load_config(path=None, **overrides):
    """Build an :class:`ExperimentConfig` from an INI file plus overrides.

    The file has an ``[experiment]`` section (``family``, ``k``, ``m``, ``p``,
    ``seed``, ``trials``, ``stop``, ``out``, ``workers``, ``identity_first``)
    and one ``[method NAME]`` section per method (``solver``, ``eta``,
    ``operator``, ``inner_iters``, ``alpha_scale``).  Overrides use the same
    keys; ``method`` is a list of names and ``eta`` replaces every method's
    schedule.
    """
    parser = configparser.ConfigParser()
    if path is not None:
        with open(path) as fh:
            parser.read_file(fh)
    exp = dict(parser["experiment"]) if parser.has_section("experiment") else {}
    for key in ("family", "k", "m", "p", "seed", "trials", "stop", "out", "workers",
                "identity_first"):
        if overrides.get(key) is not None:
            exp[key] = str(overrides[key])
    family = exp.get("family")
    if family is None:
        raise InvalidSpecError("experiment family is required")
    defaults = FAMILY_DEFAULTS.get(family, {"dims": {}, "trials": 1, "stop": "iters:1000"})
    dims = {d: int(exp[d]) if d in exp else v for d, v in defaults["dims"].items()}
    methods = {}
    for section in parser.sections():
        if section.startswith("method "):
            name = section[len("method "):].strip()
            s = parser[section]
            methods[name] = MethodConfig(
                name, s.get("solver", name), s.get("eta"), s.get("operator"),
                s.getint("inner_iters", 10), s.getfloat("alpha_scale", 3e-6),
            )
    if not methods:
        methods = {m.name: m for m in default_methods(family)}
    selected = overrides.get("method")
    if selected:
        chosen = []
        for name in selected:
            if name in methods:
                chosen.append(methods[name])
            else:
                eta = None if name == "dinkelbach" else defaults.get("eta")
                chosen.append(MethodConfig(name, name, eta))
        methods = {m.name: m for m in chosen}
    eta = overrides.get("eta")
    if eta is not None:
        methods = {n: replace(m, eta=eta) if m.solver != "dinkelbach" else m
                   for n, m in methods.items()}
    return ExperimentConfig(
        family=family,
        dims=dims,
        methods=tuple(methods.values()),
        seed=int(exp.get("seed", 0)),
        trials=int(exp.get("trials", defaults["trials"])),
        stop=exp.get("stop", defaults["stop"]),
        out=exp.get("out"),
        workers=int(exp.get("workers", 1)),
        identity_first=exp.get("identity_first", "false").lower() in ("1", "true", "yes"),
    )


def read_csv_without_timing(path, timing=("elapsed_s", "mean_time_s")):
    """CSV rows with timing columns dropped, for determinism comparisons."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    keep = [i for i, c in enumerate(rows[0]) if c not in timing]
    return [[r[i] for i in keep] for r in rows]
