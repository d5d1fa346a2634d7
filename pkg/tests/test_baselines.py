import numpy as np
import pytest

from conftest import grid_nearest
from fracsplit import functions as fn
from fracsplit import operators as ops
from fracsplit.baselines import (
    InnerLoopConfig,
    ThetaScaledAlpha,
    dinkelbach_run,
    halpern_project,
    hsdm_run,
    interval_solver,
)
from fracsplit.exceptions import MisuseError
from fracsplit.problems import gen_analytic, gen_quadratic_linear


class TestHSDM:
    def test_zero_iterations(self):
        u = np.array([7.0])
        np.testing.assert_array_equal(hsdm_run(ops.box([0.0], [2.0]), fn.linear([1.0]), u, 0.1, 0), u)

    def test_constrained_minimum(self):
        phi = fn.quadratic_form([[2.0]], s=[-6.0], c=9.0)  # (x - 3)^2
        u = hsdm_run(ops.box([0.0], [2.0]), phi, [0.0], lambda j: 0.1 / (j + 1), 500)
        assert abs(u[0] - 2.0) <= 1e-2

    def test_zero_gradient_is_fixed_point_iteration(self, rng):
        T = ops.compose([ops.halfspace([1, 2], 1.0), ops.box([-1, -1], [1, 1])])
        u1 = 3 * rng.normal(size=2)
        u = hsdm_run(T, fn.constant(4.0, 2, "convex"), u1, 0.3, 25)
        ref = u1
        for _ in range(25):
            ref = T(ref)
        assert np.array_equal(u, ref)


class TestHalpern:
    def test_identity_keeps_anchor(self, rng):
        z = rng.normal(size=3)
        np.testing.assert_allclose(halpern_project(ops.identity(3), z, iters=100), z, rtol=1e-14)

    def test_interval(self):
        u = halpern_project(ops.box([0.0], [1.0]), np.array([2.0]), iters=10_000)
        assert abs(u[0] - 1.0) <= 1e-2

    def test_two_halfspaces_against_grid(self):
        A = ops.halfspace([1.0, 1.0], 1.0)
        B = ops.halfspace([1.0, -1.0], 0.0)
        z = np.array([2.0, 1.5])
        ref = grid_nearest(z, lambda X, Y: (X + Y <= 1.0) & (X - Y <= 0.0), lo=-1, hi=3, step=2e-3)
        T = ops.compose([A, B])
        u = halpern_project(T, z, iters=10_000)
        assert np.linalg.norm(u - ref) <= 1e-2
        # approaches the oracle monotonically in the sampled horizons
        u_short = halpern_project(T, z, iters=100)
        assert np.linalg.norm(u - ref) < np.linalg.norm(u_short - ref)

    def test_lambda_range(self):
        with pytest.raises(MisuseError):
            halpern_project(ops.identity(1), np.zeros(1), lambdas=1.5, iters=2)
        with pytest.raises(MisuseError):
            halpern_project(ops.identity(1), np.zeros(1), lambdas=0.0, iters=2)


class TestDinkelbach:
    def test_exact_inner_solves(self):
        p = gen_analytic("quad_over_x_1d")
        cfg = InnerLoopConfig(exact_solver=interval_solver)
        state, trace = dinkelbach_run(p, [2.0], cfg, "iters:3")
        thetas = np.append(trace["theta"], state.theta)
        np.testing.assert_allclose(thetas[:3], [2.0, 1.0, 1.0], atol=1e-9)
        assert abs(state.theta - 1.0) <= 1e-9
        assert np.all(np.diff(thetas) <= 1e-12)

    def test_zero_outer_iterations(self):
        p = gen_analytic("quad_over_x_1d")
        state, trace = dinkelbach_run(p, [2.0], outer_stop="iters:0")
        assert len(trace) == 0 and state.theta == 2.0

    def test_hsdm_inner_on_linear_instance(self):
        p = gen_quadratic_linear(30, 5, 0)
        state, trace = dinkelbach_run(p, p.metadata["x0"], InnerLoopConfig(10), "iters:20")
        assert np.all(np.isfinite(trace["theta"]))
        assert np.all(np.isnan(trace["eta"]))
        assert trace.config["method"] == "dinkelbach" and trace.config["inner"] == "hsdm"

    def test_alpha_rule(self):
        assert ThetaScaledAlpha()(5, 2.0) == pytest.approx(1e-6)
        with pytest.raises(MisuseError):
            InnerLoopConfig(inner_iters=0)

    def test_interval_solver_needs_interval(self):
        with pytest.raises(MisuseError):
            interval_solver(fn.linear([1.0, 1.0]), ops.identity(2), np.zeros(2))
