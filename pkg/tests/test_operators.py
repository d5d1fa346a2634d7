import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import grid_nearest
from fracsplit import operators as ops
from fracsplit.diagnostics import cutter_slack, fne_slack, qne_slack, sqne_slack
from fracsplit.exceptions import InvalidOperatorError, RankDeficiencyError

finite = st.floats(-50, 50, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=finite)


class TestHalfspace:
    def test_feasible_point_unchanged(self):
        np.testing.assert_array_equal(ops.project_halfspace([1, 0], 0, [-1, 1]), [-1, 1])

    def test_clips_first_coordinate(self):
        np.testing.assert_allclose(ops.project_halfspace([1, 0], 0, [2, 3]), [0, 3])

    def test_oblique_normal(self):
        np.testing.assert_allclose(ops.project_halfspace([3, 4], 5, [3, 4]), [0.6, 0.8],
                                   atol=1e-15)

    @pytest.mark.parametrize("a,b,x", [([1, 0], 0, [2, 3]), ([3, 4], 5, [3, 4]),
                                       ([1, -2], 1, [2, -2])])
    def test_agrees_with_grid(self, a, b, x):
        a = np.array(a, float)
        got = ops.project_halfspace(a, b, x)
        ref = grid_nearest(np.array(x, float), lambda X, Y: a[0] * X + a[1] * Y <= b + 1e-12,
                           center=got, half=0.5)
        np.testing.assert_allclose(got, ref, atol=2e-3)

    def test_zero_normal_rejected(self):
        with pytest.raises(InvalidOperatorError):
            ops.project_halfspace([0, 0], 1, [1, 1])
        with pytest.raises(InvalidOperatorError):
            ops.halfspace([0, 0], 1)

    @given(vec3, vec3, st.floats(-10, 10))
    def test_result_is_feasible(self, a, x, b):
        if np.linalg.norm(a) < 1e-3:
            return
        y = ops.project_halfspace(a, b, x)
        assert a @ y <= b + 1e-9 * (1 + abs(b) + np.abs(a) @ np.abs(x))


class TestBox:
    @pytest.mark.parametrize("lo,hi,x,want", [
        ([0, 0], [1, 1], [0.5, 0.5], [0.5, 0.5]),
        ([0, 0], [1, 1], [-2, 3], [0, 1]),
        ([1, 1], [2, 2], [3, 0.5], [2, 1]),
    ])
    def test_examples(self, lo, hi, x, want):
        np.testing.assert_array_equal(ops.project_box(lo, hi, x), want)
        np.testing.assert_array_equal(ops.box(lo, hi)(np.array(x, float)), want)

    def test_inverted_bounds_rejected(self):
        with pytest.raises(InvalidOperatorError):
            ops.project_box([1, 0], [0, 1], [0, 0])
        with pytest.raises(InvalidOperatorError):
            ops.box([1, 0], [0, 1])

    def test_scalar_bounds_need_dim(self):
        T = ops.box(1e-8, 1e8, dim=4)
        assert T.dim == 4
        np.testing.assert_array_equal(T(np.array([-1.0, 0.5, 2e8, 3.0])), [1e-8, 0.5, 1e8, 3.0])


class TestAffine:
    def test_single_row(self):
        np.testing.assert_allclose(ops.project_affine([[1, 0]], [0], [3, 5]), [0, 5])

    def test_point_already_on_set(self):
        np.testing.assert_allclose(ops.project_affine([[1, 1]], [2], [1, 1]), [1, 1])

    def test_diagonal_line(self):
        np.testing.assert_allclose(ops.project_affine([[1, 1]], [2], [3, 3]), [1, 1])

    def test_matches_hyperplane_projection(self, rng):
        a = rng.normal(size=6)
        x = rng.normal(size=6)
        np.testing.assert_allclose(ops.project_affine(a[None, :], [0.7], x),
                                   ops.project_hyperplane(a, 0.7, x), atol=1e-13)

    def test_agrees_with_grid(self):
        A = np.array([[1.0, 2.0]])
        x = np.array([2.0, -1.0])
        got = ops.project_affine(A, [1.0], x)
        # on the line x2 = (1 - x1)/2 the grid tolerance is half a cell in x1
        ref = grid_nearest(x, lambda X, Y: np.abs(X + 2 * Y - 1) <= 1.5e-3,
                           center=got, half=0.5)
        np.testing.assert_allclose(got, ref, atol=3e-3)

    def test_residual_and_optimality(self, rng):
        A = rng.uniform(0, 1, (5, 20))
        b = rng.uniform(0, 1, 5)
        x = rng.normal(size=20)
        y = ops.affine(A, b)(x)
        assert np.linalg.norm(A @ y - b) <= 1e-10 * (1 + np.linalg.norm(b))
        # x - y lies in the row space of A
        coef, *_ = np.linalg.lstsq(A.T, x - y, rcond=None)
        np.testing.assert_allclose(A.T @ coef, x - y, atol=1e-10)

    def test_rank_deficiency(self):
        with pytest.raises(RankDeficiencyError):
            ops.affine([[1, 1], [2, 2]], [1, 2])
        with pytest.raises(RankDeficiencyError):
            ops.affine([[1, 0], [0, 1], [1, 1]], [1, 1, 2])
        with pytest.raises(RankDeficiencyError):
            ops.affine([[1, 1], [1, 1 + 1e-9]], [1, 1])


class TestComposites:
    def test_compose_single_is_identity(self, rng):
        x = rng.normal(size=3)
        np.testing.assert_array_equal(ops.compose([ops.identity(3)])(x), x)

    def test_compose_order(self):
        T = ops.compose([ops.halfspace([1, 0], 1), ops.box([0, 0], [np.inf, np.inf])])
        np.testing.assert_array_equal(T(np.array([2.0, -1.0])), [1, 0])

    def test_average_identity(self, rng):
        x = rng.normal(size=4)
        T = ops.average([ops.identity(4), ops.identity(4)], [0.5, 0.5])
        np.testing.assert_allclose(T(x), x)

    def test_average_of_two_rays(self):
        T = ops.average([ops.halfspace([1.0], 0.0), ops.halfspace([-1.0], -2.0)], [0.5, 0.5])
        np.testing.assert_allclose(T(np.array([1.0])), [1.0])

    def test_weights_validated(self):
        I = ops.identity(2)
        with pytest.raises(InvalidOperatorError):
            ops.average([I, I], [0.5, 0.6])
        with pytest.raises(InvalidOperatorError):
            ops.average([I, I], [1.5, -0.5])
        with pytest.raises(InvalidOperatorError):
            ops.average([I], [0.5, 0.5])

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidOperatorError):
            ops.compose([ops.identity(2), ops.identity(3)])
        with pytest.raises(InvalidOperatorError):
            ops.average([ops.identity(2), ops.identity(3)])
        with pytest.raises(InvalidOperatorError):
            ops.compose([])

    def test_moduli(self):
        P = ops.halfspace([1, 0], 0)
        assert P.sqne_modulus == 1.0
        assert ops.compose([P, P, P]).sqne_modulus == pytest.approx(1 / 3)
        half = ops.compose([P, P])
        assert ops.average([half, P]).sqne_modulus == pytest.approx(0.5)

    def test_qne_around_common_fixed_point(self, rng):
        z = np.array([0.3, -0.2])
        A = ops.halfspace([1, 1], 1.0)
        B = ops.halfspace([-1, 2], 0.5)
        xs = 5 * rng.normal(size=(1000, 2))
        assert qne_slack(ops.compose([A, B]), xs, z) >= -1e-10
        assert qne_slack(ops.average([A, B], [0.3, 0.7]), xs, z) >= -1e-10

    def test_leaves(self):
        A, B, C = ops.identity(2), ops.halfspace([1, 0], 0), ops.box([0, 0], [1, 1])
        T = ops.compose([ops.average([A, B]), C])
        assert T.leaves() == [A, B, C]

    def test_shape_mismatch_on_apply(self):
        with pytest.raises(InvalidOperatorError):
            ops.identity(3)(np.zeros(2))


class TestResidual:
    def test_identity(self, rng):
        assert ops.residual(ops.identity(5), rng.normal(size=5)) == 0.0

    def test_interval(self):
        assert ops.residual(ops.box([0.0], [1.0]), np.array([3.0])) == 2.0

    def test_halfspace(self):
        assert ops.residual(ops.halfspace([1, 0], 0), np.array([2.0, 0.0])) == 2.0


@pytest.mark.parametrize("kind", ["halfspace", "hyperplane", "affine", "box", "ball"])
def test_projection_inequalities(kind, rng):
    k = 4
    T = {
        "halfspace": ops.halfspace(rng.normal(size=k), 0.3),
        "hyperplane": ops.hyperplane(rng.normal(size=k), -0.4),
        "affine": ops.affine(rng.normal(size=(2, k)), rng.normal(size=2)),
        "box": ops.box(-np.ones(k), np.ones(k)),
        "ball": ops.ball(rng.normal(size=k), 1.5),
    }[kind]
    xs, ys = 4 * rng.normal(size=(1000, k)), 4 * rng.normal(size=(1000, k))
    zs = [T(v) for v in 4 * rng.normal(size=(10, k))]
    assert fne_slack(T, xs, ys) >= -1e-10
    assert cutter_slack(T, xs[:100], zs) >= -1e-10
    assert min(sqne_slack(T, xs[:100], z, rho=1.0) for z in zs) >= -1e-10
    # idempotent on the image
    for x in xs[:50]:
        tx = T(x)
        assert np.linalg.norm(T(tx) - tx) <= 1e-10 * (1 + np.linalg.norm(tx))


@settings(max_examples=50)
@given(vec3, vec3)
def test_box_fne_property(x, y):
    T = ops.box([-1, 0, 2], [1, 3, 2.5])
    d = T(x) - T(y)
    assert d @ (x - y) >= d @ d - 1e-10 * (1 + abs(d @ d))


def test_cyclic_fixed_point_reaches_intersection():
    T = ops.compose([ops.halfspace([1, 1], 1), ops.box([0, 0], [2, 2])])
    z = ops.cyclic_fixed_point(T, np.array([3.0, 3.0]), 1000, tol=0)
    assert ops.residual(T, z) <= 1e-12


def test_operators_are_immutable():
    T = ops.halfspace([1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        T.params["a"][0] = 5.0
