import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from l1sampling import (
    DataTerm,
    DomainError,
    GroupStructure,
    QuadratureConfig,
    TargetModel,
    grad_G,
    laplace_mixture_residual,
    pi_log_unnormalized,
    rho_log_unnormalized,
)
from l1sampling.linops import DimensionError

finite = st.floats(-50, 50, allow_nan=False)


class TestRho:
    def test_zero_vector(self, null_model):
        assert rho_log_unnormalized(np.zeros(3), null_model(3)) == 0.0

    def test_1d_model(self, model_1d):
        assert rho_log_unnormalized(np.array([3.0]), model_1d) == pytest.approx(-8.1, abs=1e-12)

    def test_beta_scaling(self, null_model):
        assert rho_log_unnormalized(np.array([1.0, -1.0]), null_model(2, beta=2.0)) == pytest.approx(-4.0)

    def test_dimension_mismatch(self, model_1d):
        with pytest.raises(DimensionError):
            rho_log_unnormalized(np.zeros(2), model_1d)

    @given(st.lists(finite, min_size=3, max_size=3))
    def test_difference_to_origin(self, xs):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(4, 3))
        y = rng.normal(size=4)
        m = TargetModel(0.7, 1.3, DataTerm.quadratic(A, y))
        x = np.array(xs)
        G = lambda z: 0.5 * np.sum((A @ z - y) ** 2)  # noqa: E731
        got = rho_log_unnormalized(x, m) - rho_log_unnormalized(np.zeros(3), m)
        want = -1.3 * (0.7 * np.abs(x).sum() + G(x) - G(np.zeros(3)))
        assert got == pytest.approx(want, rel=1e-10, abs=1e-9)


class TestPi:
    def test_origin_v(self, null_model):
        assert pi_log_unnormalized(np.array([1.0]), np.array([0.0]), null_model()) == pytest.approx(-0.5)

    def test_1d_model(self, model_1d):
        assert pi_log_unnormalized(np.array([1.0]), np.array([1.0]), model_1d) == pytest.approx(-4.7)

    def test_boundary(self, null_model):
        with pytest.raises(DomainError):
            pi_log_unnormalized(np.array([0.0, 1.0]), np.zeros(2), null_model(2))

    @given(
        st.lists(st.floats(0.01, 10), min_size=3, max_size=3),
        st.lists(finite, min_size=3, max_size=3),
        st.integers(0, 7),
    )
    def test_null_even_in_v_and_factorises(self, us, vs, flips):
        m = null_model_3 = TargetModel(1.4, 0.8, DataTerm.zero(3))
        u, v = np.array(us), np.array(vs)
        sign = np.array([1 - 2 * ((flips >> i) & 1) for i in range(3)])
        assert pi_log_unnormalized(u, v * sign, m) == pytest.approx(pi_log_unnormalized(u, v, m), abs=1e-12)
        one = TargetModel(1.4, 0.8, DataTerm.zero(1))
        total = sum(pi_log_unnormalized(u[i : i + 1], v[i : i + 1], one) for i in range(3))
        assert abs(total - pi_log_unnormalized(u, v, null_model_3)) <= 1e-12 * max(1.0, abs(total))


class TestGrad:
    def test_zero_kind(self, null_model):
        np.testing.assert_array_equal(grad_G(np.array([1.0, -2.0]), null_model(2)), [0.0, 0.0])

    def test_scalar(self, model_1d):
        np.testing.assert_allclose(grad_G(np.array([1.0]), model_1d), [-2.0])

    def test_diag(self):
        m = TargetModel(1.0, 1.0, DataTerm.quadratic(np.diag([2.0, 2.0]), np.zeros(2)))
        np.testing.assert_allclose(grad_G(np.ones(2), m), [4.0, 4.0])

    def test_matches_finite_difference(self):
        rng = np.random.default_rng(1)
        m = TargetModel(1.0, 1.0, DataTerm.quadratic(rng.normal(size=(5, 4)), rng.normal(size=5)))
        x = rng.normal(size=4)
        h = 1e-6
        fd = [
            (m.data_term.value(x + h * e) - m.data_term.value(x - h * e)) / (2 * h) for e in np.eye(4)
        ]
        np.testing.assert_allclose(grad_G(x, m), fd, rtol=1e-6, atol=1e-8)

    def test_dimension_mismatch(self, model_1d):
        with pytest.raises(DimensionError):
            grad_G(np.zeros(3), model_1d)


class TestModelTypes:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            TargetModel(0.0, 1.0, DataTerm.zero(1))
        with pytest.raises(ValueError):
            TargetModel(1.0, -1.0, DataTerm.zero(1))

    def test_quadratic_shapes(self):
        with pytest.raises(DimensionError):
            DataTerm.quadratic(np.ones((3, 2)), np.ones(4))

    def test_lipschitz_is_squared_norm(self):
        M = np.random.default_rng(2).normal(size=(40, 20))
        L = DataTerm.quadratic(M, np.zeros(40)).lipschitz_L
        assert L == pytest.approx(np.linalg.svd(M, compute_uv=False)[0] ** 2, rel=1e-6)

    def test_groups(self):
        g = GroupStructure.from_blocks([[0, 2], [1], [3, 4]], 5)
        assert g.n_groups == 3
        np.testing.assert_array_equal(g.sizes, [2, 1, 2])
        np.testing.assert_allclose(g.group_norms(np.array([3.0, 1.0, 4.0, 0.0, 2.0])), [5.0, 1.0, 2.0])

    @pytest.mark.parametrize(
        "blocks", [[[0], [0, 1]], [[0]], [[], [0, 1]], [[0, 1, 5]]], ids=["overlap", "gap", "empty", "range"]
    )
    def test_group_validation(self, blocks):
        with pytest.raises(ValueError):
            GroupStructure.from_blocks(blocks, 2)

    def test_quadrature_config_validation(self):
        with pytest.raises(ValueError):
            QuadratureConfig(abs_tol=0.0)


class TestMixture:
    def test_origin(self):
        assert laplace_mixture_residual(0.0, 1.0, QuadratureConfig()) <= 1e-8

    def test_unit(self):
        assert laplace_mixture_residual(1.0, 1.0, QuadratureConfig()) <= 1e-8

    def test_even(self):
        assert laplace_mixture_residual(-2.0, 0.5, QuadratureConfig()) <= 1e-8

    @pytest.mark.parametrize("a", [0.5, 1.0, 2.7])
    def test_grid(self, a):
        for z in range(-5, 6):
            assert laplace_mixture_residual(float(z), a, QuadratureConfig()) <= 1e-8
