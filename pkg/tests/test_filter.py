import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drgpb import MjlsModel, ScheduledModel, make_rng, sample_trajectory
from drgpb.errors import FilterStepError, ModelError
from drgpb.filter import (FilterConfig, FilterTrace, RobustnessSchedule, check_state,
                          compute_mode_losses, drgpb_step, init_filter, merge_estimates,
                          run_filter)

from tests.conftest import random_model, scalar_model
from tests.reference import classical_gpb1, textbook_kalman


# --- merge -------------------------------------------------------------------

def test_merge_two_symmetric_modes():
    b = merge_estimates([0.5, 0.5], [[1.0], [-1.0]], [[[1.0]], [[1.0]]])
    np.testing.assert_allclose(b.mean, [0.0], atol=1e-15)
    np.testing.assert_allclose(b.cov, [[2.0]], atol=1e-15)


def test_merge_point_mass_returns_that_mode():
    rng = np.random.default_rng(1)
    means = rng.normal(size=(3, 2))
    covs = [np.eye(2) * (j + 1) for j in range(3)]
    b = merge_estimates([0.0, 1.0, 0.0], means, covs)
    np.testing.assert_array_equal(b.mean, means[1])
    np.testing.assert_array_equal(b.cov, covs[1])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_merge_is_translation_equivariant(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(2, 5)), int(rng.integers(1, 4))
    w = rng.dirichlet(np.ones(n))
    means = rng.normal(size=(n, d))
    covs = [M @ M.T for M in rng.normal(size=(n, d, d))]
    shift = rng.normal(size=d) * 10
    a = merge_estimates(w, means, covs)
    b = merge_estimates(w, means + shift, covs)
    np.testing.assert_allclose(b.mean, a.mean + shift, atol=1e-12)
    np.testing.assert_allclose(b.cov, a.cov, atol=1e-11)
    assert np.linalg.eigvalsh(a.cov).min() >= -1e-12
    np.testing.assert_array_equal(a.cov, a.cov.T)


# --- init and losses -----------------------------------------------------------

def test_init_study_model(study_config):
    s = init_filter(study_config.nominal_schedule)
    np.testing.assert_array_equal(s.mu, [0.4, 0.6])
    np.testing.assert_array_equal(s.nu_star, s.mu)
    np.testing.assert_array_equal(s.mean, [0.0, 0.0])
    np.testing.assert_array_equal(s.cov, np.eye(2))
    assert s.k == 0 and s.alpha == 0.0


def test_init_single_mode_and_zero_cov():
    s = init_filter(scalar_model(X0=0.0))
    np.testing.assert_array_equal(s.mu, [1.0])
    np.testing.assert_array_equal(s.cov, [[0.0]])


def test_init_rejects_invalid_model():
    m = scalar_model(Pi=((0.5, 0.4), (0.5, 0.5)), p0=(0.5, 0.5))
    with pytest.raises(ModelError):
        init_filter(m)


def test_mode_losses():
    np.testing.assert_allclose(compute_mode_losses([0.5, 0.5], [np.diag([1.0, 1.0]), np.diag([1.0, 3.0])]),
                               [4.0, 8.0])
    L = compute_mode_losses([1.0, 0.0], [[[1.0]], [[1.0]]], floor=1e-12)
    assert L[1] == 1e12 and L[0] == 1.0
    assert compute_mode_losses([1.0], [[[2.5]]]).tolist() == [2.5]


# --- radius schedules ------------------------------------------------------------

def test_radius_schedule_forms():
    assert RobustnessSchedule(0.2).at(7) == 0.2
    lst = RobustnessSchedule([0.0, 0.1, 0.3])
    assert [lst(k) for k in (1, 2, 3)] == [0.0, 0.1, 0.3]
    pw = RobustnessSchedule({1: 0.0, 70: 0.5})
    assert pw(69) == 0.0 and pw(70) == 0.5 and pw(100) == 0.5
    fn = RobustnessSchedule(lambda k: 0.01 * k)
    assert fn(3) == pytest.approx(0.03)


@pytest.mark.parametrize("bad", [-0.1, 1.5, [0.2, 2.0], {1: 0.1, 5: -1.0}])
def test_radius_schedule_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        RobustnessSchedule(bad)


def test_radius_schedule_must_start_at_one():
    with pytest.raises(ValueError):
        RobustnessSchedule({2: 0.1})
    with pytest.raises(ValueError):
        RobustnessSchedule(lambda k: 3.0).at(1)


# --- step and run --------------------------------------------------------------------

def test_step_validates_inputs(study_model):
    s = init_filter(study_model)
    with pytest.raises(ValueError):
        drgpb_step(s, study_model, [1.0, 2.0, 3.0], 0.1)
    with pytest.raises(ValueError):
        drgpb_step(s, study_model, [1.0, 2.0], 1.2)


def test_run_single_observation_equals_one_step(study_model):
    y = np.array([0.7, -0.3])
    (a,) = run_filter(study_model, [y], 0.2)
    b = drgpb_step(init_filter(study_model), study_model, y, 0.2)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.cov, b.cov)
    np.testing.assert_array_equal(a.nu_star, b.nu_star)


def test_run_filter_include_initial(study_model):
    states = run_filter(study_model, [[0.1, 0.0], [0.2, 0.1]], include_initial=True)
    assert [s.k for s in states] == [0, 1, 2]


def test_run_filter_rejects_empty(study_model):
    with pytest.raises(ValueError):
        run_filter(study_model, np.zeros((0, 2)))


def test_rerun_is_identical(study_config):
    traj = sample_trajectory(study_config.true_schedule, 100, make_rng(5, 0))
    a = FilterTrace.from_states(run_filter(study_config.nominal_schedule, traj.observations, 0.0))
    b = FilterTrace.from_states(run_filter(study_config.nominal_schedule, traj.observations, 0.0))
    for name in ("means", "covs", "mu", "nu_star"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_zero_radius_matches_classical_gpb():
    rng = np.random.default_rng(11)
    for _ in range(10):
        m = random_model(rng)
        traj = sample_trajectory(m, 30, rng)
        states = run_filter(m, traj.observations, 0.0)
        ref = classical_gpb1(m, lambda k: m, traj.observations)
        for s, (x, P, mu) in zip(states, ref):
            np.testing.assert_allclose(s.mean, x, rtol=0, atol=1e-12 * max(1, np.abs(x).max()))
            np.testing.assert_allclose(s.cov, P, rtol=0, atol=1e-12 * max(1, np.abs(P).max()))
            np.testing.assert_allclose(s.mu, mu, rtol=0, atol=1e-12)
            np.testing.assert_array_equal(s.nu_star, s.mu)


def test_schedule_switch_is_used():
    # after step 3 the chain becomes absorbing in mode 1, so mu must follow
    base = scalar_model(a=0.9, w=1.0, v=1.0, X0=1.0, Pi=((0.5, 0.5), (0.5, 0.5)), p0=(0.5, 0.5))
    sched = ScheduledModel(base, [(1, {}), (4, {"Pi": [[0.0, 1.0], [0.0, 1.0]]})])
    states = run_filter(sched, np.ones((6, 1)), 0.0)
    np.testing.assert_allclose(states[2].mu, [0.5, 0.5])
    for s in states[3:]:
        np.testing.assert_array_equal(s.mu, [0.0, 1.0])


def test_single_mode_matches_kalman_for_any_radius():
    rng = np.random.default_rng(3)
    m = random_model(rng, n_theta=1, n_x=3, n_y=2)
    traj = sample_trajectory(m, 200, rng)
    ref_x, ref_P = textbook_kalman(m.A[0], m.B[0], m.C[0], m.D[0], m.W, m.V,
                                   m.x0_mean, m.X0, traj.observations)
    for r in (0.0, 0.3, 1.0):
        tr = FilterTrace.from_states(run_filter(m, traj.observations, r))
        np.testing.assert_allclose(tr.means, ref_x, rtol=0, atol=1e-10)
        np.testing.assert_allclose(tr.covs, ref_P, rtol=0, atol=1e-10)


def test_identical_modes_match_kalman_for_any_radius():
    rng = np.random.default_rng(4)
    one = random_model(rng, n_theta=1, n_x=2, n_y=1)
    m = MjlsModel(A=[one.A[0]] * 3, B=[one.B[0]] * 3, C=[one.C[0]] * 3, D=[one.D[0]] * 3,
                  W=one.W, V=one.V, Pi=rng.dirichlet(np.ones(3), size=3),
                  p0_mode=[0.2, 0.3, 0.5], x0_mean=one.x0_mean, X0=one.X0)
    traj = sample_trajectory(m, 80, rng)
    ref_x, _ = textbook_kalman(one.A[0], one.B[0], one.C[0], one.D[0], one.W, one.V,
                               one.x0_mean, one.X0, traj.observations)
    for r in (0.0, 0.1, 0.5, 1.0):
        tr = FilterTrace.from_states(run_filter(m, traj.observations, r))
        np.testing.assert_allclose(tr.means, ref_x, rtol=0, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1))
def test_invariants_hold_along_runs(seed, r):
    rng = np.random.default_rng(seed)
    m = random_model(rng)
    traj = sample_trajectory(m, 25, rng)
    for s in run_filter(m, traj.observations, r):
        assert check_state(s) == []
        assert abs(s.value - s.value_equiv) <= 1e-9 * max(1.0, abs(s.value))


def test_point_mass_nu_star_gives_mode_estimate():
    # radius 1 moves every bit of mass onto the top-loss mode
    rng = np.random.default_rng(9)
    m = random_model(rng, n_theta=3, n_x=2, n_y=1)
    traj = sample_trajectory(m, 5, rng)
    for s in run_filter(m, traj.observations, 1.0):
        top = int(np.argmax(s.nu_star))
        if s.nu_star[top] == 1.0:
            # other entries may be subnormal rather than exactly zero
            np.testing.assert_allclose(s.mean, s.bank[top].posterior.mean, rtol=1e-13)
            np.testing.assert_allclose(s.cov, s.bank[top].posterior.cov, rtol=1e-13)


def test_joseph_form_agrees():
    rng = np.random.default_rng(6)
    m = random_model(rng)
    traj = sample_trajectory(m, 40, rng)
    a = FilterTrace.from_states(run_filter(m, traj.observations, 0.2))
    b = FilterTrace.from_states(run_filter(m, traj.observations, 0.2, FilterConfig(joseph=True)))
    np.testing.assert_allclose(a.means, b.means, atol=1e-8)
    np.testing.assert_allclose(a.covs, b.covs, atol=1e-8)


def test_singular_model_reports_step():
    m = MjlsModel(A=[[[1.0]]], B=[[[0.0]]], C=[[[1.0]]], D=[[[0.0]]], W=[[1.0]], V=[[1.0]],
                  Pi=[[1.0]], p0_mode=[1.0], x0_mean=[0.0], X0=[[0.0]])
    with pytest.raises(FilterStepError) as err:
        run_filter(m, [[0.0], [0.0]])
    assert err.value.step == 1
    assert "step 1" in str(err.value)
