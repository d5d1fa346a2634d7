import numpy as np
import pytest
from sklearn.base import clone

from fracsplit.baselines import interval_solver
from fracsplit.estimators import AFSSM, FSSM, IFSSM, Dinkelbach
from fracsplit.exceptions import MisuseError
from fracsplit.functions import SumOfRatiosProgram
from fracsplit.problems import gen_analytic, gen_sum_linear_ratios
from fracsplit.solvers import fssm_run


def test_fssm_matches_functional_api():
    p = gen_analytic("quad_over_one_1d")
    est = FSSM(step="harmonic:0.1", stop="iters:300").fit(p)
    state, trace = fssm_run(p, p.metadata["x0"], "harmonic:0.1", "iters:300")
    assert np.array_equal(est.x_, state.x)
    assert est.theta_ == state.theta and est.n_iter_ == 300 and est.status_ == "max_iters"
    assert np.array_equal(est.trace_["theta"], trace["theta"])


def test_params_and_clone():
    est = AFSSM(step="const:0.01", stop="iters:5")
    assert est.get_params() == {"step": "const:0.01", "stop": "iters:5", "record_iterates": None}
    other = clone(est).set_params(stop="iters:7")
    assert other.stop == "iters:7" and est.stop == "iters:5"


def test_explicit_start():
    p = gen_analytic("quad_over_one_1d")
    est = AFSSM(step="harmonic:0.5", stop="iters:3000").fit(p, x0=[-5.0])
    assert abs(est.x_[0] - 1) < 1e-3
    assert est.objective(p) == pytest.approx(est.theta_)


def test_ifssm_requires_sum_of_ratios():
    with pytest.raises(MisuseError):
        IFSSM().fit(gen_analytic("quad_over_one_1d"))
    p = gen_sum_linear_ratios(3, 2, 2, 1)
    est = IFSSM(step="harmonic:1", stop="iters:50").fit(p)
    assert est.n_iter_ == 50
    with pytest.raises(MisuseError):
        FSSM().fit(p)


def test_single_term_ifssm():
    p = gen_analytic("quad_over_one_1d")
    q = SumOfRatiosProgram.from_fractional(p)
    a = FSSM(step="const:0.01", stop="iters:100").fit(p)
    b = IFSSM(step="const:0.01", stop="iters:100").fit(q)
    assert np.array_equal(a.x_, b.x_)


def test_dinkelbach_estimator():
    p = gen_analytic("quad_over_x_1d")
    est = Dinkelbach(stop="iters:3", exact_solver=interval_solver).fit(p)
    assert abs(est.theta_ - 1) <= 1e-9
    assert set(est.get_params()) == {"inner_iters", "alpha_scale", "stop", "exact_solver"}


def test_wrong_start_dimension():
    with pytest.raises(ValueError):
        FSSM().fit(gen_analytic("quad_over_one_1d"), x0=[1.0, 2.0])
