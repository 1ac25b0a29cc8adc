import numpy as np
import pytest
from scipy import stats

from drgpb import MjlsModel, ModelError, ScheduledModel, sample_trajectory, validate_model
from drgpb.model import cov_sqrt, make_rng

from tests.conftest import scalar_model

PI_A = [[0.60, 0.40], [0.45, 0.55]]
PI_B = [[0.95, 0.05], [0.90, 0.10]]


def two_mode(Pi=PI_A, W=np.eye(2)):
    I = np.eye(2)
    return MjlsModel(A=[I, 0.5 * I], B=[I, I], C=[I, I], D=[I, I], W=W, V=I, Pi=Pi,
                     p0_mode=[0.4, 0.6], x0_mean=[0, 0], X0=I)


class TestValidate:
    def test_study_row_ok(self, study_model):
        assert validate_model(study_model).ok
        assert validate_model(two_mode()).ok

    def test_row_sum(self):
        rep = validate_model(two_mode(Pi=[[0.6, 0.6], [0.45, 0.55]]))
        assert not rep.ok
        assert any("row sum ≠ 1" in v for v in rep.violations)

    def test_negative_definite_noise(self):
        rep = validate_model(two_mode(W=-np.eye(2)))
        assert "W not PSD" in rep.violations

    def test_dimension_mismatch(self):
        I = np.eye(2)
        m = MjlsModel(A=[I], B=[I], C=[np.ones((1, 3))], D=[np.eye(1)], W=I, V=np.eye(1),
                      Pi=[[1.0]], p0_mode=[1.0], x0_mean=[0, 0], X0=I)
        rep = validate_model(m)
        assert any(v.startswith("C has shape") for v in rep.violations)

    def test_bad_initial_distribution(self):
        m = two_mode().replace(p0_mode=[0.5, 0.6])
        assert any("p0_mode" in v for v in validate_model(m).violations)

    def test_model_is_read_only(self):
        m = two_mode()
        with pytest.raises(ValueError):
            m.A[0, 0, 0] = 3.0


class TestSampling:
    def test_noiseless_recursion(self):
        traj = sample_trajectory(scalar_model(a=0.5), 3, seed=0)
        np.testing.assert_array_equal(traj.states[:, 0], [1.0, 0.5, 0.25, 0.125])
        np.testing.assert_array_equal(traj.modes, [0, 0, 0])
        np.testing.assert_array_equal(traj.observations[:, 0], [0.5, 0.25, 0.125])

    def test_same_seed_same_trajectory(self, study_config):
        a = sample_trajectory(study_config.true_schedule, 50, seed=11)
        b = sample_trajectory(study_config.true_schedule, 50, seed=11)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.modes, b.modes)
        np.testing.assert_array_equal(a.observations, b.observations)
        c = sample_trajectory(study_config.true_schedule, 50, seed=12)
        assert not np.array_equal(a.states, c.states)

    def test_deterministic_chain_alternates(self):
        m = scalar_model(Pi=[[0.0, 1.0], [1.0, 0.0]], p0=[1.0, 0.0])
        traj = sample_trajectory(m, 6, seed=3)
        # hand-unrolled chain: theta_0 = 0, then flip every step
        expected, s = [], 0
        for _ in range(6):
            s = 1 - s
            expected.append(s)
        assert traj.initial_mode == 0
        np.testing.assert_array_equal(traj.modes, expected)

    def test_transition_frequencies(self):
        Pi = np.array([[0.7, 0.2, 0.1], [0.3, 0.3, 0.4], [0.05, 0.15, 0.8]])
        m = scalar_model(Pi=Pi, p0=[1 / 3] * 3, w=1.0, v=1.0)
        traj = sample_trajectory(m, 100_000, seed=5)
        seq = np.concatenate([[traj.initial_mode], traj.modes])
        counts = np.zeros((3, 3))
        np.add.at(counts, (seq[:-1], seq[1:]), 1)
        for i in range(3):
            n = counts[i].sum()
            assert stats.chisquare(counts[i], n * Pi[i]).pvalue > 1e-3

    def test_stream_independence(self):
        a = make_rng(4, 1).random(3)
        b0 = make_rng(4, 0).random(3)
        b = make_rng(4, 1).random(3)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, b0)

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            sample_trajectory(scalar_model(), 0)

    def test_invalid_model_rejected(self):
        with pytest.raises(ModelError, match="row sum"):
            sample_trajectory(two_mode(Pi=[[0.6, 0.6], [0.45, 0.55]]), 3)


class TestSchedule:
    def test_lookup(self):
        s = ScheduledModel(two_mode(), [(1, {"Pi": PI_A}), (70, {"Pi": PI_B})])
        np.testing.assert_array_equal(s.at(30).Pi, PI_A)
        np.testing.assert_array_equal(s.at(69).Pi, PI_A)
        np.testing.assert_array_equal(s.at(70).Pi, PI_B)
        np.testing.assert_array_equal(s.at(500).Pi, PI_B)

    def test_single_segment(self):
        s = ScheduledModel(two_mode(), [(1, {"Pi": PI_A})])
        for k in (1, 7, 1000):
            np.testing.assert_array_equal(s.at(k).Pi, PI_A)

    @pytest.mark.parametrize("segments", [
        [(2, {})],
        [(1, {}), (50, {}), (30, {})],
        [(1, {}), (1, {})],
    ])
    def test_bad_segments(self, segments):
        with pytest.raises(ModelError):
            ScheduledModel(two_mode(), segments)

    def test_invalid_override(self):
        with pytest.raises(ModelError, match="row sum"):
            ScheduledModel(two_mode(), [(1, {}), (5, {"Pi": [[0.6, 0.6], [0.5, 0.5]]})])

    def test_sampler_follows_schedule(self):
        # mode 1 is absorbing from step 10 on
        m = scalar_model(Pi=[[1.0, 0.0], [0.0, 1.0]], p0=[1.0, 0.0])
        s = ScheduledModel(m, [(1, {}), (10, {"Pi": [[0.0, 1.0], [0.0, 1.0]]})])
        traj = sample_trajectory(s, 20, seed=0)
        assert np.all(traj.modes[:9] == 0)
        assert np.all(traj.modes[9:] == 1)


def test_cov_sqrt_clamps_roundoff():
    M = np.array([[1.0, 1.0], [1.0, 1.0]]) - 1e-14 * np.eye(2)
    R = cov_sqrt(M)
    np.testing.assert_allclose(R @ R.T, np.array([[1.0, 1.0], [1.0, 1.0]]), atol=1e-7)
    with pytest.raises(ModelError):
        cov_sqrt(-np.eye(2))
