"""Returns, REINFORCE estimator, update rules, and short end-to-end training runs."""

import numpy as np
import pytest

from qpgrad.cartpole import InitRanges
from qpgrad.errors import UsageError
from qpgrad.policy import AnsatzSpec, PolicyParams, zero_params
from qpgrad.seeding import substream
from qpgrad.trainer import (
    TrainConfig,
    Trajectory,
    apply_update,
    batch_gradient,
    discounted_returns,
    rollout,
    train,
)

SPEC = AnsatzSpec()


def make_traj(glp_nu, glp_omega):
    glp_nu = np.asarray(glp_nu, dtype=np.float64)
    n = len(glp_nu)
    return Trajectory(
        observations=np.zeros((n, 4)),
        actions=np.zeros(n, dtype=np.int64),
        rewards=np.ones(n),
        glp_nu=glp_nu,
        glp_omega=np.asarray(glp_omega, dtype=np.float64),
        total_reward=float(n),
        failed=n < 200,
    )


class TestDiscountedReturns:
    def test_three_ones(self):
        np.testing.assert_allclose(discounted_returns([1, 1, 1], 0.99), [2.9701, 1.99, 1.0])

    def test_gamma_zero_returns_rewards(self):
        r = [0.5, 2.0, 1.0]
        np.testing.assert_allclose(discounted_returns(r, 0.0), r)

    def test_gamma_one_sums(self):
        out = discounted_returns([1.0] * 200, 1.0)
        assert out[0] == pytest.approx(200.0)
        assert out[-1] == pytest.approx(1.0)


class TestBatchGradient:
    def test_zero_length_episode_zero_gradient(self):
        tr = make_traj(np.zeros((0, 48)), np.zeros((0, 48)))
        gnu, gom = batch_gradient([tr], 0.99)
        assert not gnu.any() and not gom.any()

    def test_single_step_unit_return(self):
        glp = np.arange(48, dtype=np.float64)[None, :]
        gnu, gom = batch_gradient([make_traj(glp, 2 * glp)], gamma=0.99)
        np.testing.assert_allclose(gnu, glp[0])
        np.testing.assert_allclose(gom, 2 * glp[0])

    def test_duplication_invariance(self):
        rng = np.random.default_rng(0)
        trajs = [make_traj(rng.normal(size=(5, 48)), rng.normal(size=(5, 48))) for _ in range(3)]
        g1 = batch_gradient(trajs, 0.9)
        g2 = batch_gradient(trajs + trajs, 0.9)
        np.testing.assert_allclose(g1[0], g2[0])
        np.testing.assert_allclose(g1[1], g2[1])

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        trajs = [make_traj(rng.normal(size=(k, 48)), rng.normal(size=(k, 48))) for k in (3, 7, 5)]
        g1 = batch_gradient(trajs, 0.95)
        g2 = batch_gradient(trajs[::-1], 0.95)
        np.testing.assert_allclose(g1[0], g2[0], atol=1e-12)

    def test_empty_batch_raises(self):
        with pytest.raises(UsageError):
            batch_gradient([], 0.99)

    def test_batch_mean_baseline_zeroes_identical_batch(self):
        rng = np.random.default_rng(2)
        glp = rng.normal(size=(6, 48))
        trajs = [make_traj(glp, glp), make_traj(glp, glp)]
        gnu, gom = batch_gradient(trajs, 0.99, baseline="batch_mean")
        np.testing.assert_allclose(gnu, 0.0, atol=1e-14)
        np.testing.assert_allclose(gom, 0.0, atol=1e-14)

    def test_steps_normalization_is_scalar_rescale(self):
        rng = np.random.default_rng(3)
        trajs = [make_traj(rng.normal(size=(k, 48)), rng.normal(size=(k, 48))) for k in (4, 6)]
        g_ep = batch_gradient(trajs, 0.9, grad_norm="episodes")
        g_st = batch_gradient(trajs, 0.9, grad_norm="steps")
        np.testing.assert_allclose(g_st[0] * 10, g_ep[0] * 2, atol=1e-12)


class TestApplyUpdate:
    def test_zero_gradient_no_lambda_is_identity(self):
        params = zero_params(SPEC)
        params.nu += 0.3
        params.omega += 0.2
        zero = (np.zeros(SPEC.param_shape), np.zeros(SPEC.param_shape))
        for opt in ("vanilla", "adam"):
            cfg = TrainConfig(optimizer=opt, lam=0.0)
            out, _ = apply_update(params, zero, cfg)
            np.testing.assert_array_equal(out.nu, params.nu)
            np.testing.assert_array_equal(out.omega, params.omega)

    def test_vanilla_decay_value(self):
        # omega 1.0, lambda 0.1, alpha 0.05 -> 1 - 2*0.05*0.1*0.25 = 0.9975
        params = zero_params(SPEC)
        params.omega[0, 0, 0] = 1.0
        cfg = TrainConfig(optimizer="vanilla", lam=0.1, learning_rate=0.05)
        zero = (np.zeros(SPEC.param_shape), np.zeros(SPEC.param_shape))
        out, _ = apply_update(params, zero, cfg)
        assert out.omega[0, 0, 0] == pytest.approx(0.9975)

    def test_nu_never_sees_regularizer(self):
        rng = np.random.default_rng(4)
        params = PolicyParams(rng.normal(size=SPEC.param_shape), rng.normal(size=SPEC.param_shape))
        zero = (np.zeros(SPEC.param_shape), np.zeros(SPEC.param_shape))
        for opt in ("vanilla", "adam"):
            out, _ = apply_update(params, zero, TrainConfig(optimizer=opt, lam=0.7))
            np.testing.assert_array_equal(out.nu, params.nu)

    def test_omega_norm_strictly_decreases_under_decay(self):
        rng = np.random.default_rng(5)
        zero = (np.zeros(SPEC.param_shape), np.zeros(SPEC.param_shape))
        for opt in ("vanilla", "adam"):
            params = PolicyParams(np.zeros(SPEC.param_shape), rng.normal(size=SPEC.param_shape))
            cfg = TrainConfig(optimizer=opt, lam=0.3)
            state = None
            for _ in range(5):
                before = np.linalg.norm(params.omega)
                params, state = apply_update(params, zero, cfg, state)
                assert np.linalg.norm(params.omega) < before

    def test_lambda_zero_update_symmetric_in_tensors(self):
        # without the penalty, omega follows the same rule as nu
        rng = np.random.default_rng(6)
        g = rng.normal(size=SPEC.param_shape)
        params = PolicyParams(np.full(SPEC.param_shape, 0.1), np.full(SPEC.param_shape, 0.1))
        out, _ = apply_update(params, (g, g), TrainConfig(optimizer="vanilla", lam=0.0))
        np.testing.assert_allclose(out.nu, out.omega)


class TestRollout:
    def test_trajectory_shape_consistency(self):
        params = zero_params(SPEC)
        tr = rollout(SPEC, params, InitRanges(), substream(1, 1, 0))
        assert len(tr) == tr.total_reward
        assert tr.glp_nu.shape == (len(tr), SPEC.n_params_each)
        assert tr.observations.shape == (len(tr), 4)
        assert tr.failed == (tr.total_reward < 200)

    def test_rollout_deterministic_per_stream(self):
        params = zero_params(SPEC)
        a = rollout(SPEC, params, InitRanges(), substream(9, 1, 3))
        b = rollout(SPEC, params, InitRanges(), substream(9, 1, 3))
        assert np.array_equal(a.actions, b.actions)
        assert np.array_equal(a.glp_omega, b.glp_omega)


class TestTrain:
    def test_zero_epochs_returns_init(self):
        cfg = TrainConfig(epochs=0, seed=7)
        params, records = train(cfg, SPEC, InitRanges())
        assert records == []
        assert params.nu.shape == SPEC.param_shape

    def test_bit_identical_reproducibility(self):
        cfg = TrainConfig(epochs=3, seed=11)
        p1, r1 = train(cfg, SPEC, InitRanges())
        p2, r2 = train(cfg, SPEC, InitRanges())
        assert np.array_equal(p1.nu, p2.nu)
        assert np.array_equal(p1.omega, p2.omega)
        for a, b in zip(r1, r2):
            assert (a.epoch, a.mean_reward, a.reg_objective, a.lipschitz_total) == (
                b.epoch,
                b.mean_reward,
                b.reg_objective,
                b.lipschitz_total,
            )

    def test_records_track_live_lipschitz(self):
        from qpgrad.policy import lipschitz_bound

        cfg = TrainConfig(epochs=2, seed=13)
        params, records = train(cfg, SPEC, InitRanges())
        assert records[-1].lipschitz_total == lipschitz_bound(SPEC, params).total
