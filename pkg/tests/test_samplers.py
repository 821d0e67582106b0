import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from l1sampling import DataTerm, GroupStructure, TargetModel, pi_log_unnormalized
from l1sampling.diagnostics import ks_statistic, multichain_ess
from l1sampling.rng_dist import RngStream
from l1sampling.samplers import (
    MYULA,
    GibbsKernel,
    GibbsSampler,
    GibbsState,
    GroupHadamardULA,
    HadamardMALA,
    HadamardULA,
    SamplerState,
    StepConfig,
    StepError,
    drift_constants,
    gibbs_eta_given_x,
    gibbs_x_given_eta,
    group_hadamard_step,
    hadamard_mala_step,
    hadamard_step,
    hadamard_transition_logdensity,
    lasso_map,
    lift,
    lyapunov,
    mala_log_acceptance,
    moreau_envelope_grad,
    myula_recipe,
    myula_step,
    positive_root,
    prox_l1,
    run_chain,
)

from .oracles import MEAN_X2_1D, STEP_U_1D, STEP_V_1D


def zero_noise(d=1):
    return np.zeros(d), np.zeros(d)


class TestHadamardStep:
    def test_fixed_point(self, null_model):
        s = hadamard_step(SamplerState([1.0], [0.0]), null_model(), StepConfig(0.1), None, noise=zero_noise())
        assert s.u[0] == pytest.approx(1.0, abs=1e-15)
        assert s.v[0] == 0.0

    def test_w_zero_branch(self):
        u = positive_root(np.array([0.0]), 0.1, 1.1)
        assert u[0] == pytest.approx(np.sqrt(0.1 / 1.1), abs=1e-15)
        assert u[0] == pytest.approx(0.301511, abs=1e-6)

    def test_1d_quadratic_step(self, model_1d):
        s = hadamard_step(SamplerState([1.0], [1.0]), model_1d, StepConfig(0.01), None, noise=zero_noise())
        assert s.u[0] == pytest.approx(STEP_U_1D, abs=1e-12)
        assert s.v[0] == pytest.approx(STEP_V_1D, abs=1e-12)

    def test_nonfinite_drift(self, model_1d):
        with pytest.raises(StepError) as info:
            hadamard_step(SamplerState([1e200], [1e200]), model_1d, StepConfig(0.01), None, noise=zero_noise())
        assert info.value.index == (0,)

    @given(st.floats(-1e6, 1e6), st.floats(1e-8, 10.0), st.floats(1.0, 5.0))
    def test_root_positive_and_solves(self, w, q, c):
        t = positive_root(np.array([w]), q, c)[0]
        assert t > 0
        resid = c * t * t - w * t - q
        assert abs(resid) <= 1e-9 * max(1.0, w * w, q)

    def test_large_negative_w_stays_positive(self):
        t = positive_root(np.array([-1e12]), 1e-6, 1.0)[0]
        assert t > 0
        assert t == pytest.approx(1e-18, rel=1e-9)

    @given(st.integers(0, 2**32 - 1), st.floats(1e-4, 0.5))
    def test_positivity_under_random_noise(self, seed, dt):
        m = TargetModel(2.7, 1.0, DataTerm.quadratic(np.array([[1.0]]), np.array([3.0])))
        rng = RngStream(seed)
        st_ = SamplerState(np.full((64, 1), 1e-3), rng.standard_normal((64, 1)))
        for _ in range(20):
            st_ = hadamard_step(st_, m, StepConfig(dt), rng)
            assert np.all(st_.u > 1e-300)


class TestTransitionDensity:
    def _grid(self, src, model, cfg):
        ug = np.linspace(1e-4, 2.5, 700)
        vg = np.linspace(-1.5, 2.5, 700)
        U, V = np.meshgrid(ug, vg, indexing="ij")
        dst = SamplerState(U[..., None], V[..., None])
        src_b = SamplerState(np.broadcast_to(src.u, U.shape + (1,)), np.broadcast_to(src.v, U.shape + (1,)))
        logp = hadamard_transition_logdensity(src_b, dst, model, cfg)
        return ug, vg, logp

    def test_grid_normalisation(self, model_1d):
        cfg = StepConfig(0.05)
        src = SamplerState([0.8], [0.6])
        ug, vg, logp = self._grid(src, model_1d, cfg)
        # additive constant: Gaussian normaliser of the two noise coordinates and
        # the constant Jacobian c of the v map
        s2 = 2 * cfg.dt / model_1d.beta
        c = 1 + cfg.dt * model_1d.lam
        dens = np.exp(logp) * c / (2 * np.pi * s2)
        total = integrate.trapezoid(integrate.trapezoid(dens, vg, axis=1), ug)
        assert total == pytest.approx(1.0, abs=0.01)

    def test_v_translation(self, null_model):
        m = null_model()
        cfg = StepConfig(0.1)
        src = SamplerState([0.7], [0.2])
        dst = SamplerState([0.9], [-0.4])
        c = 0.35
        shifted = SamplerState([0.7], [0.2 + c])
        k = 1 + cfg.dt * m.lam
        expected = -m.beta / (4 * cfg.dt) * ((k * -0.4 - 0.2 - c) ** 2 - (k * -0.4 - 0.2) ** 2)
        got = hadamard_transition_logdensity(shifted, dst, m, cfg) - hadamard_transition_logdensity(src, dst, m, cfg)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_rejects_nonpositive(self, null_model):
        with pytest.raises(ValueError):
            hadamard_transition_logdensity(SamplerState([1.0], [0.0]), SamplerState([0.0], [0.0]), null_model(), StepConfig(0.1))


class TestMALA:
    def test_stationary_proposal_accepted(self, null_model):
        m = null_model()
        cfg = StepConfig(0.05)
        u, v = 0.8, 0.3
        k = 1 + cfg.dt * m.lam
        q = cfg.dt / m.beta
        s = np.sqrt(2 * cfg.dt / m.beta)
        xi_u = np.array([(k * u - q / u - u) / s])
        xi_v = np.array([(k * v - v) / s])
        state = SamplerState([u], [v])
        new, acc = hadamard_mala_step(state, m, cfg, None, noise=(xi_u, xi_v), uniform=0.999999)
        assert acc
        np.testing.assert_allclose(new.u, [u], atol=1e-14)
        np.testing.assert_allclose(new.v, [v], atol=1e-14)
        assert mala_log_acceptance(state, new, m, cfg) == pytest.approx(0.0, abs=1e-10)

    def test_tiny_step_acceptance(self, model_1d):
        s = HadamardMALA(model_1d, StepConfig(1e-6))
        rec = run_chain(s, s.initial_state((200,)), 0, 50, 1, RngStream(1))
        assert rec.acceptance_rate >= 0.99

    @given(
        st.floats(0.05, 3.0), st.floats(-3.0, 3.0), st.floats(0.05, 3.0), st.floats(-3.0, 3.0), st.floats(1e-3, 0.2)
    )
    def test_detailed_balance_identity(self, ua, va, ub, vb, dt):
        m = TargetModel(2.7, 1.0, DataTerm.quadratic(np.array([[1.0]]), np.array([3.0])))
        cfg = StepConfig(dt)
        a, b = SamplerState([ua], [va]), SamplerState([ub], [vb])
        r = (
            pi_log_unnormalized(b.u, b.v, m)
            + hadamard_transition_logdensity(b, a, m, cfg)
            - pi_log_unnormalized(a.u, a.v, m)
            - hadamard_transition_logdensity(a, b, m, cfg)
        )
        diff = mala_log_acceptance(a, b, m, cfg) - mala_log_acceptance(b, a, m, cfg)
        assert diff == pytest.approx(r, abs=1e-10 * max(1.0, abs(r)))

    def test_batched_rejection_keeps_state(self, model_1d):
        state = SamplerState(np.ones((3, 1)), np.ones((3, 1)))
        new, acc = hadamard_mala_step(state, model_1d, StepConfig(0.5), RngStream(2), uniform=np.array([1.0, 1.0, 1.0]))
        assert not acc.any()
        np.testing.assert_array_equal(new.u, state.u)


class TestMYULA:
    def test_prox(self):
        np.testing.assert_allclose(prox_l1(np.array([3.0, -0.5, 0.0]), 1.0), [2.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            prox_l1(np.ones(1), -1.0)

    def test_step_formula(self):
        m = TargetModel(1.0, 1.0, DataTerm.quadratic(np.array([[1.0]]), np.array([3.0])))
        out = myula_step(np.array([3.0]), m, StepConfig(0.05, moreau_gamma=1.0), None, noise=np.zeros(1))
        assert out[0] == pytest.approx(3.0 - 0.05)

    def test_origin_fixed(self, null_model):
        out = myula_step(np.zeros(1), null_model(), StepConfig(0.1, moreau_gamma=0.5), None, noise=np.zeros(1))
        assert out[0] == 0.0

    def test_moreau_limit(self):
        x = np.array([2.0, -3.0])
        np.testing.assert_allclose(moreau_envelope_grad(x, 1.7, 1e-6), 1.7 * np.sign(x), atol=1e-4)

    def test_missing_gamma(self, null_model):
        with pytest.raises(ValueError):
            myula_step(np.zeros(1), null_model(), StepConfig(0.1), RngStream(0))

    def test_recipe(self):
        cfg = myula_recipe(2.0)
        assert cfg.moreau_gamma == pytest.approx(0.5)
        assert cfg.dt == pytest.approx(0.5 / (5 * 2.0))

    @pytest.mark.slow
    def test_bias_shrinks_with_gamma(self, model_1d):
        errs, ses = [], []
        for i, gamma in enumerate([1e-1, 1e-2, 1e-3]):
            s = MYULA(model_1d, StepConfig(1e-3, moreau_gamma=gamma))
            rec = run_chain(s, s.initial_state((2000,)), 5000, 200, 50, RngStream(11, i), transform=lambda x: x[..., 0] ** 2)
            errs.append(abs(rec.samples.mean() - MEAN_X2_1D))
            ses.append(np.sqrt(rec.samples.var() / multichain_ess(rec.samples)))
        for k in range(2):
            assert errs[k + 1] <= errs[k] + 3 * np.hypot(ses[k], ses[k + 1])
        assert errs[2] < errs[0]


class TestGibbs:
    def test_x_conditional_matches_quadrature(self, model_1d):
        kernel = GibbsKernel(model_1d)
        eta = np.ones((200000, 1))
        x = gibbs_x_given_eta(eta, kernel, RngStream(3))[:, 0]
        dens = lambda t: np.exp(-0.5 * (t - 3.0) ** 2 - 0.5 * t * t)  # noqa: E731
        Z = integrate.quad(dens, -np.inf, np.inf)[0]
        mean = integrate.quad(lambda t: t * dens(t), -np.inf, np.inf)[0] / Z
        var = integrate.quad(lambda t: (t - mean) ** 2 * dens(t), -np.inf, np.inf)[0] / Z
        assert (mean, var) == pytest.approx((1.5, 0.5), abs=1e-10)
        assert abs(x.mean() - 1.5) <= 4 * np.sqrt(0.5 / x.size)
        assert abs(x.var() - 0.5) <= 0.01

    def test_inverse_eta_conditional_matches_quadrature(self, model_1d):
        x = np.full((400000, 1), 3.0)
        inv = 1.0 / gibbs_eta_given_x(x, model_1d, RngStream(4))[:, 0]
        a = model_1d.beta * model_1d.lam
        dens = lambda e: e**-0.5 * np.exp(-9.0 / (2 * e) - a * a * e / 2)  # noqa: E731
        Z = integrate.quad(dens, 0, np.inf)[0]
        m_inv = integrate.quad(lambda e: dens(e) / e, 0, np.inf)[0] / Z
        assert m_inv == pytest.approx(0.9, rel=1e-8)
        assert abs(inv.mean() - 0.9) <= 4 * np.sqrt(0.9**3 / 7.29 / inv.size)
        assert ks_statistic(inv, stats.invgauss(mu=0.9 / 7.29, scale=7.29).cdf) <= 0.005

    def test_zero_branch(self, model_1d):
        eta = gibbs_eta_given_x(np.zeros((400000, 1)), model_1d, RngStream(5))
        assert eta.mean() == pytest.approx(0.5 / 3.645, rel=0.01)

    def test_needs_quadratic(self, null_model):
        with pytest.raises(ValueError):
            GibbsSampler(null_model())

    def test_batched_step_shapes(self):
        rng = np.random.default_rng(0)
        m = TargetModel(0.5, 1.0, DataTerm.quadratic(rng.normal(size=(6, 4)), rng.normal(size=6)))
        s = GibbsSampler(m)
        st_ = s.initial_state((3, 2))
        new, _ = s.step(st_, RngStream(1))
        assert new.x.shape == (3, 2, 4)
        assert np.all(new.eta > 0)


class TestGroup:
    def test_singletons_bitwise(self, model_1d):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(5, 3))
        m = TargetModel(0.8, 1.2, DataTerm.quadratic(A, rng.normal(size=5)))
        g = GroupStructure.singletons(3)
        cfg = StepConfig(0.02)
        a = b = SamplerState(np.ones((4, 3)), rng.normal(size=(4, 3)))
        ra, rb = RngStream(9), RngStream(9)
        for _ in range(25):
            a = hadamard_step(a, m, cfg, ra)
            b = group_hadamard_step(b, g, m, cfg, rb)
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.v, b.v)

    def test_pair_closed_form(self, null_model):
        m = null_model(2)
        g = GroupStructure.from_blocks([[0, 1]], 2)
        cfg = StepConfig(0.1)
        xi_u, xi_v = np.array([0.3]), np.array([0.1, -0.2])
        out = group_hadamard_step(SamplerState([1.2], [0.5, -0.5]), g, m, cfg, None, noise=(xi_u, xi_v))
        s = np.sqrt(0.2)
        w = 1.2 + s * 0.3
        np.testing.assert_allclose(out.u, positive_root(np.array([w]), 0.1, 1.1, 2), rtol=1e-15)
        np.testing.assert_allclose(out.v, (np.array([0.5, -0.5]) + s * xi_v) / 1.1, rtol=1e-15)

    def test_mismatch(self, null_model):
        g = GroupStructure.from_blocks([[0, 1]], 2)
        with pytest.raises(ValueError):
            group_hadamard_step(SamplerState([1.0, 1.0], [0.0, 0.0]), g, null_model(2), StepConfig(0.1), RngStream(0))

    @pytest.mark.slow
    def test_group_norm_law(self, null_model):
        # blocks {0,1} and {2}: |x_b| ~ Gamma(|b|, beta lam)
        m = null_model(3)
        g = GroupStructure.from_blocks([[0, 1], [2]], 3)
        s = GroupHadamardULA(m, g, StepConfig(1e-3))
        rec = run_chain(s, s.initial_state((250,)), 20000, 4000, 40, RngStream(12))
        norms = g.group_norms(rec.samples)
        assert ks_statistic(norms[..., 0], stats.gamma(2.0).cdf) <= 0.02
        assert ks_statistic(norms[..., 1], stats.expon().cdf) <= 0.02
        assert rec.min_u_seen > 0


class TestChain:
    def test_empty_record(self, model_1d):
        s = HadamardULA(model_1d, StepConfig(0.01))
        rec = run_chain(s, s.initial_state(), 10, 0, 1, RngStream(0))
        assert rec.samples.shape == (0, 1)
        assert 0 < rec.min_u_seen <= 1.0
        assert rec.n_steps == 10

    def test_replay(self, model_1d):
        for s in (HadamardULA(model_1d, StepConfig(0.01)), MYULA(model_1d, StepConfig(0.01, 0.01)), GibbsSampler(model_1d)):
            a = run_chain(s, s.initial_state(), 5, 20, 3, RngStream(4))
            b = run_chain(s, s.initial_state(), 5, 20, 3, RngStream(4))
            np.testing.assert_array_equal(a.samples, b.samples)

    def test_thinning(self, model_1d):
        s = HadamardULA(model_1d, StepConfig(0.01))
        full = run_chain(s, s.initial_state(), 4, 30, 1, RngStream(5))
        thin = run_chain(s, s.initial_state(), 4, 10, 3, RngStream(5))
        np.testing.assert_array_equal(thin.samples, full.samples[2::3])

    def test_step_error_carries_step(self, model_1d):
        s = HadamardULA(model_1d, StepConfig(0.01))
        with pytest.raises(StepError) as info:
            run_chain(s, SamplerState([1e200], [1e200]), 0, 3, 1, RngStream(0))
        assert info.value.step == 0

    def test_bad_counts(self, model_1d):
        s = HadamardULA(model_1d, StepConfig(0.01))
        with pytest.raises(ValueError):
            run_chain(s, s.initial_state(), 0, 1, 0, RngStream(0))

    @pytest.mark.slow
    def test_1d_small_step_mean(self, model_1d):
        s = HadamardULA(model_1d, StepConfig(5e-4))
        rec = run_chain(s, s.initial_state((1000,)), 20000, 1000, 200, RngStream(6), transform=lambda x: x[..., 0] ** 2)
        se = np.sqrt(rec.samples.var() / multichain_ess(rec.samples))
        # ULA bias at this step is about 0.8 * dt (measured slope of the rate sweep)
        assert abs(rec.samples.mean() - MEAN_X2_1D) <= 3 * se + 1.0 * 5e-4


class TestMisc:
    def test_drift_constants(self, null_model):
        m = null_model(4)
        alpha, R = drift_constants(m, 0.1, 0.0)
        assert alpha == pytest.approx(1 / 1.21)
        assert R > 0
        alpha_bad, _ = drift_constants(m, 0.1, 20.0)
        assert alpha_bad > 1

    def test_lyapunov(self):
        assert lyapunov(SamplerState([1.0, 2.0], [0.0, -1.0])) == pytest.approx(7.0)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=8))
    def test_lift(self, xs):
        s = lift(np.array(xs))
        assert np.all(s.u > 0)
        np.testing.assert_allclose(s.u * s.v, xs, rtol=1e-12, atol=1e-300)

    def test_lasso_map_1d(self, model_1d):
        assert lasso_map(model_1d)[0] == pytest.approx(0.3, abs=1e-10)

    def test_step_config_validation(self):
        with pytest.raises(ValueError):
            StepConfig(0.0)
        with pytest.raises(ValueError):
            StepConfig(0.1, moreau_gamma=-1.0)
        with pytest.raises(ValueError):
            GibbsState(np.zeros(1), np.zeros(1))
