import json

import numpy as np
import pytest

from multici.optimizer import (
    ConfigError,
    MultiCiConfig,
    RunResult,
    check_convergence,
    follower_probabilities,
    form_pool_z,
    initialize,
    learning_attempt,
    neighborhood_interval,
    pool_z_probabilities,
    positivity_shift,
    read_trace_csv,
    roulette_select,
    run,
    sample_batch,
    select_behavior,
    write_trace_csv,
)
from multici.problems import get_problem

SPHERE2 = get_problem("A1")


# -- probabilities ---------------------------------------------------------

def test_positive_pool_uses_plain_inverse():
    p = follower_probabilities([1.0, 2.0, 4.0])
    np.testing.assert_allclose(p, [4 / 7, 2 / 7, 1 / 7])


def test_shift_rule_hand_example():
    # min -2, max 3: shifted values 0.5, 2.5, 5.5 (plus the tiny floor)
    np.testing.assert_allclose(positivity_shift([-2.0, 0.0, 3.0]), [0.5, 2.5, 5.5], atol=1e-11)
    p = follower_probabilities([-2.0, 0.0, 3.0])
    np.testing.assert_allclose(p, [0.7746478873, 0.1549295775, 0.0704225352], atol=1e-9)


def test_shift_keeps_order_and_handles_zero():
    p = pool_z_probabilities([0.0, 1.0, 2.0])
    assert np.all(p > 0) and p[0] > p[1] > p[2]
    assert p.sum() == pytest.approx(1.0)


def test_equal_values_give_uniform_wheel():
    np.testing.assert_allclose(follower_probabilities([-3.0, -3.0, -3.0, -3.0]), 0.25)


def test_tiny_positive_values_do_not_overflow():
    p = follower_probabilities([1e-320, 1.0])
    assert np.all(np.isfinite(p)) and p[0] == pytest.approx(1.0)


def test_empty_pool_rejected():
    with pytest.raises(ValueError):
        follower_probabilities([])


def test_probabilities_along_axis():
    F = np.array([[1.0, 3.0], [-1.0, 5.0]])
    p = follower_probabilities(F)
    np.testing.assert_allclose(p.sum(axis=-1), 1.0)
    np.testing.assert_allclose(p[0], [0.75, 0.25])


# -- roulette --------------------------------------------------------------

@pytest.mark.parametrize("u,expected", [(0.0, 0), (0.2, 0), (0.2000001, 1), (0.5, 1),
                                        (0.5000001, 2), (1.0, 2)])
def test_roulette_boundaries(u, expected):
    assert roulette_select([0.2, 0.3, 0.5], u=u) == expected


def test_roulette_vectorised():
    probs = np.array([[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(roulette_select(probs, u=np.array([0.5, 0.5])), [0, 1])


def test_roulette_clamps_roundoff():
    assert roulette_select([0.3, 0.3, 0.3999999999], u=1.0) == 2


def test_roulette_needs_source_of_randomness():
    with pytest.raises(ValueError):
        roulette_select([1.0])


# -- intervals and sampling ------------------------------------------------

def test_interval_clipped_at_upper_bound():
    lo, hi = neighborhood_interval(0.4426, (-5.12, 5.12), (-5.12, 5.12), 0.98)
    assert lo == pytest.approx(-4.5750, abs=1e-3) and hi == 5.12


def test_interval_clipped_at_lower_bound():
    lo, hi = neighborhood_interval(-2.7681, (-5.12, 5.12), (-5.12, 5.12), 0.98)
    assert lo == -5.12 and hi == pytest.approx(-2.7681 + 5.0176, abs=1e-12)


def test_interval_center_on_bound():
    lo, hi = neighborhood_interval(5.12, (-5.12, 5.12), (-5.12, 5.12), 0.98)
    assert (lo, hi) == pytest.approx((5.12 - 5.0176, 5.12))


def test_interval_uses_followed_width_not_center_box():
    lo, hi = neighborhood_interval(np.array([0.0, 1.0]), (np.array([-1.0, 0.0]),
                                   np.array([1.0, 4.0])), (-10.0, 10.0), 0.5)
    np.testing.assert_allclose(lo, [-0.5, 0.0])
    np.testing.assert_allclose(hi, [0.5, 2.0])


def test_sample_batch_shapes_and_containment():
    rng = np.random.default_rng(3)
    lo = np.array([[-1.0, 2.0], [0.0, 0.0]])
    hi = np.array([[1.0, 3.0], [0.5, 0.1]])
    batch = sample_batch((lo, hi), 7, rng, SPHERE2)
    assert batch.qualities.shape == (2, 7, 2) and batch.behaviors.shape == (2, 7)
    assert np.all(batch.qualities >= lo[:, None, :]) and np.all(batch.qualities <= hi[:, None, :])
    np.testing.assert_allclose(batch.behaviors, (batch.qualities**2).sum(-1))


def test_gaussian_sampling_stays_in_box():
    rng = np.random.default_rng(0)
    b = sample_batch((np.array([0.0]), np.array([1.0])), 1000, rng, strategy="gaussian",
                     center=np.array([0.9]))
    assert b.qualities.min() >= 0.0 and b.qualities.max() <= 1.0
    assert abs(np.median(b.qualities) - 0.9) < 0.1


def test_sample_batch_rejects_bad_input():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_batch((np.zeros(1), np.ones(1)), 0, rng)
    with pytest.raises(ValueError):
        sample_batch((np.zeros(1), np.ones(1)), 1, rng, strategy="levy")


def test_select_behavior_counts_intra_first_and_breaks_ties_low():
    assert select_behavior([3.0, 1.0], [1.0, 0.5]) == (3, 0.5)
    assert select_behavior([1.0, 2.0], [1.0]) == (0, 1.0)


def test_form_pool_z_ties_pick_lowest_index():
    idx, vals = form_pool_z([[2.0, 1.0, 1.0], [0.0, 5.0, 0.0]])
    np.testing.assert_array_equal(idx, [1, 0])
    np.testing.assert_array_equal(vals, [1.0, 0.0])


# -- saturation --------------------------------------------------------------

def test_saturation_counter_grows_and_resets():
    flat = np.full((3, 5), 2.0)
    done, c = check_convergence(flat, flat, 1e-10, 0, 3)
    assert (done, c) == (False, 1)
    done, c = check_convergence(flat, flat, 1e-10, 2, 3)
    assert (done, c) == (True, 3)
    spread = flat.copy()
    spread[0, 0] = 2.1
    assert check_convergence(spread, spread, 1e-10, 2, 3) == (False, 0)


def test_saturation_needs_stable_extremes():
    prev = np.full((2, 2), 1.0)
    cur = np.full((2, 2), 0.5)
    assert check_convergence(cur, prev, 1e-10, 5, 10) == (False, 0)


# -- config ------------------------------------------------------------------

def test_presets():
    standard = MultiCiConfig.preset("default")
    assert (standard.cohorts, standard.candidates_per_cohort, standard.reduction_factor,
            standard.samples_t, standard.samples_tz) == (3, 5, 0.98, 5, 10)
    small = MultiCiConfig.preset("compact", seed=4)
    assert (small.candidates_per_cohort, small.samples_t, small.samples_tz, small.seed) == (3, 2, 4, 4)
    with pytest.raises(ConfigError):
        MultiCiConfig.preset("fast")


@pytest.mark.parametrize("bad", [
    dict(cohorts=0), dict(candidates_per_cohort=1), dict(reduction_factor=0.0),
    dict(reduction_factor=1.5), dict(samples_t=0), dict(epsilon=0.0), dict(seed=-1),
    dict(sampling="cauchy"), dict(max_attempts=2.5), dict(target_tolerance=-1.0),
])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        MultiCiConfig(**bad)


def test_config_json_round_trip(tmp_path):
    cfg = MultiCiConfig(seed=9, target_value=1e-8, sampling="gaussian")
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert MultiCiConfig.from_json(p) == cfg
    assert MultiCiConfig.from_json('{"seed": 9}').seed == 9
    with pytest.raises(ConfigError):
        MultiCiConfig.from_dict({"colonies": 3})


# -- learning attempt ----------------------------------------------------------

def _state(problem=SPHERE2, seed=0, **kw):
    cfg = MultiCiConfig(seed=seed, **kw)
    rng = np.random.default_rng(seed)
    return cfg, rng, initialize(cfg, problem, rng)


def test_initialize_shapes():
    cfg, _, st = _state()
    assert st.qualities.shape == (3, 5, 2) and st.behaviors.shape == (3, 5)
    assert st.evaluations == 15 and st.attempt == 1
    np.testing.assert_array_equal(st.lower, -5.12)


def test_attempt_keeps_elites_and_input_state():
    cfg, rng, st = _state()
    before = st.copy()
    new = learning_attempt(st, cfg, SPHERE2, rng)
    np.testing.assert_array_equal(st.behaviors, before.behaviors)
    k = np.arange(3)
    elite = np.argmin(before.behaviors, axis=1)
    np.testing.assert_array_equal(new.qualities[k, elite], before.qualities[k, elite])
    assert new.evaluations == 15 + cfg.evaluations_per_attempt
    assert new.attempt == 2


def test_followers_take_their_best_sample():
    cfg, rng, st = _state(seed=5)
    new = learning_attempt(st, cfg, SPHERE2, rng)
    np.testing.assert_allclose(new.behaviors, (new.qualities**2).sum(-1))
    assert np.all(new.lower <= new.qualities) and np.all(new.qualities <= new.upper)


def test_widths_contract_geometrically():
    cfg, rng, st = _state(seed=2)
    width0 = 10.24
    for _ in range(40):
        st = learning_attempt(st, cfg, SPHERE2, rng)
        bound = width0 * cfg.reduction_factor ** (st.attempt - 1)
        assert np.all(st.upper - st.lower <= bound * (1 + 1e-12))


def test_literal_mode_leaves_elite_boxes():
    cfg, rng, st = _state(seed=2, contract_elites=False)
    new = learning_attempt(st, cfg, SPHERE2, rng)
    k = np.arange(3)
    elite = np.argmin(st.behaviors, axis=1)
    np.testing.assert_array_equal(new.lower[k, elite], st.lower[k, elite])


def test_single_cohort_is_supported():
    res = run(MultiCiConfig(cohorts=1, max_attempts=50), "A1")
    assert res.attempts_used == 50 and np.isfinite(res.best_value)


# -- run ---------------------------------------------------------------------

def test_run_is_deterministic():
    cfg = MultiCiConfig(seed=11, max_attempts=200)
    a, b = run(cfg, "F7"), run(cfg, "F7")
    assert a.best_value == b.best_value
    assert a.trace == b.trace


def test_run_stops_at_target():
    res = run(MultiCiConfig(seed=1, target_value=1e-3), "A1")
    assert res.converged_by == "target" and res.best_value <= 1e-3
    assert res.evaluations == 15 + res.attempts_used * 3 * 4 * 15


def test_run_stops_at_cap():
    res = run(MultiCiConfig(seed=1, max_attempts=7, epsilon=1e-300), "F44")
    assert res.converged_by == "attempt_cap" and res.attempts_used == 7 and len(res.trace) == 7


def test_run_with_dimension_override():
    res = run(MultiCiConfig(max_attempts=5), "F18", dimension=4)
    assert res.dimension == 4 and res.best_qualities.shape == (4,)


def test_run_result_round_trip():
    res = run(MultiCiConfig(max_attempts=10), "F10")
    back = RunResult.from_dict(res.to_dict())
    assert back.trace == res.trace and back.best_value == res.best_value
    np.testing.assert_array_equal(back.best_qualities, res.best_qualities)


def test_trace_csv_round_trip(tmp_path):
    res = run(MultiCiConfig(max_attempts=20, seed=3), "F7")
    path = tmp_path / "t.csv"
    text = write_trace_csv(res, path)
    assert text.splitlines()[0] == "attempt,cohort,best_value,global_best,max_F,min_F"
    assert len(text.splitlines()) == 1 + 20 * 3
    assert read_trace_csv(path) == res.trace


def test_trace_csv_rejects_garbage(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    with pytest.raises(ValueError):
        read_trace_csv(empty)
    bad = tmp_path / "b.csv"
    bad.write_text("attempt,cohort\n1,1\n")
    with pytest.raises(ValueError):
        read_trace_csv(bad)
