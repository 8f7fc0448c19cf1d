import math

import numpy as np
import pytest

from stablelab import (
    AnisotropicBox,
    AxisAlignedSet,
    ConfigurationError,
    ExitProbe,
    FinalStateProbe,
    HitProbe,
    SimulationConfig,
    StableIndexSet,
    Trajectory,
    count_transitions,
    first_exit,
    first_hit,
    resolve_threshold,
    run_ensemble,
    sample_stable_increment,
    simulate_path,
    path_stream,
)
from stablelab.coefficients import diagonal_field, identity_field, rotation_field
from stablelab.engine import THRESHOLD_FRACTION

IDX = StableIndexSet([1.0, 1.5])
ID2 = identity_field(2)


def _cfg(**kw):
    base = dict(dt=1.0 / 64.0, horizon=1.0, jump_threshold=1.0)
    base.update(kw)
    return SimulationConfig(**base)


# ---------------------------------------------------------------------------
# configuration plumbing


def test_simulation_config_validation():
    with pytest.raises(ConfigurationError):
        SimulationConfig(dt=0.0, horizon=1.0)
    with pytest.raises(ConfigurationError):
        SimulationConfig(dt=0.1, horizon=-1.0)
    with pytest.raises(ConfigurationError):
        SimulationConfig(dt=2.0, horizon=1.0)
    with pytest.raises(ConfigurationError):
        SimulationConfig(dt=0.1, horizon=1.0, jump_threshold=0.0)
    with pytest.raises(ConfigurationError):
        SimulationConfig(dt=0.1, horizon=1.0, n_threads=0)


def test_n_steps_requires_divisibility():
    assert SimulationConfig(dt=0.25, horizon=1.0).n_steps == 4
    with pytest.raises(ConfigurationError):
        SimulationConfig(dt=0.3, horizon=1.0).n_steps


def test_scaled_keeps_grid():
    cfg = SimulationConfig(dt=0.25, horizon=1.0, jump_threshold=0.5)
    big = cfg.scaled(4.0)
    assert big.dt == 0.25
    assert big.n_steps == 16
    assert big.jump_threshold == 0.5


def test_resolve_threshold():
    box = AnisotropicBox(np.zeros(2), 0.25, IDX)
    cfg = SimulationConfig(dt=0.1, horizon=1.0, jump_threshold=0.7)
    assert resolve_threshold(cfg, box) == 0.7
    auto = SimulationConfig(dt=0.1, horizon=1.0)
    # default rule: fraction of the smallest halfwidth (0.25**1.5 here)
    assert resolve_threshold(auto, box) == pytest.approx(
        THRESHOLD_FRACTION * 0.25 ** 1.5)
    with pytest.raises(ConfigurationError):
        resolve_threshold(auto, None)


# ---------------------------------------------------------------------------
# law checks of the scheme


def test_identity_field_characteristic_function():
    # X_t = x0 + Z_t: each coordinate is a stable increment at its own index
    n = 100_000
    out = run_ensemble(lambda m: FinalStateProbe(m, 2), np.zeros(2), ID2, IDX,
                       n, _cfg(), seed=2025)
    final = out["final_state"]
    assert not np.any(np.isnan(final))
    for i, alpha in enumerate([1.0, 1.5]):
        for xi in (0.5, 1.0, 2.0):
            vals = np.cos(xi * final[:, i])
            se = vals.std(ddof=1) / math.sqrt(n)
            target = math.exp(-xi ** alpha)
            assert abs(vals.mean() - target) <= 3.0 * se, (i, xi)


def test_constant_diagonal_scales_in_law():
    # A = diag(2, 1): first coordinate is 2 x (stable alpha_1 increment)
    n = 50_000
    field = diagonal_field([2.0, 1.0])
    out = run_ensemble(lambda m: FinalStateProbe(m, 2), np.zeros(2), field,
                       IDX, n, _cfg(), seed=7)
    got = np.sort(out["final_state"][:, 0])
    ref = 2.0 * sample_stable_increment(1.0, 1.0, path_stream(8, 0), size=n)
    q = np.linspace(0.05, 0.95, 19)
    qa, qb = np.quantile(got, q), np.quantile(ref, q)
    spread = qb[-1] - qb[0]
    assert np.all(np.abs(qa - qb) < 0.05 * spread)


def test_jump_marks_apply_left_limit_column():
    # the recorded mark must reproduce X_post - X_pre = size * A(X_pre) e_axis
    field = rotation_field(amplitude=0.9, frequency=2.0)
    found = 0
    for seed in range(6):
        traj = simulate_path(np.array([0.3, -0.2]), field, IDX,
                             _cfg(jump_threshold=0.3), seed=seed)
        assert traj.times[0] == 0.0
        assert np.all(np.diff(traj.times) > 0.0)
        assert np.array_equal(traj.states[0], [0.3, -0.2])
        for mark in traj.marks:
            found += 1
            col = field.evaluate(mark.pre_state)[:, mark.axis]
            gap = mark.post_state - mark.pre_state - mark.size * col
            assert np.max(np.abs(gap)) <= 1e-12
    assert found > 5  # the loop actually saw jumps


def test_simulate_path_requires_threshold():
    with pytest.raises(ConfigurationError):
        simulate_path(np.zeros(2), ID2, IDX,
                      SimulationConfig(dt=0.1, horizon=1.0), seed=0)


# ---------------------------------------------------------------------------
# reproducibility


def _exit_outputs(n, seed, **cfg_kw):
    box = AnisotropicBox(np.zeros(2), 0.3, IDX)
    out = run_ensemble(lambda m: ExitProbe(m, box), np.zeros(2), ID2, IDX, n,
                       _cfg(**cfg_kw), seed, box=box)
    return out


def test_batch_size_invariance():
    a = _exit_outputs(3000, 11, batch_size=256)
    b = _exit_outputs(3000, 11, batch_size=1024)
    c = _exit_outputs(3000, 11, batch_size=4096)
    for key in ("exit_time", "exit_state", "pre_exit_state", "censored"):
        assert np.array_equal(a[key], b[key], equal_nan=True), key
        assert np.array_equal(a[key], c[key], equal_nan=True), key


def test_thread_count_invariance():
    a = _exit_outputs(3000, 12, batch_size=512, n_threads=1)
    b = _exit_outputs(3000, 12, batch_size=512, n_threads=4)
    for key in ("exit_time", "exit_state", "pre_exit_state", "censored"):
        assert np.array_equal(a[key], b[key], equal_nan=True), key


def test_single_path_reproducible():
    a = simulate_path(np.zeros(2), ID2, IDX, _cfg(), seed=99)
    b = simulate_path(np.zeros(2), ID2, IDX, _cfg(), seed=99)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.states, b.states)
    assert len(a.marks) == len(b.marks)


# ---------------------------------------------------------------------------
# exits


def test_start_outside_box_exits_immediately():
    box = AnisotropicBox(np.zeros(2), 0.2, IDX)
    x0 = np.array([5.0, 5.0])
    rec = first_exit(x0, ID2, IDX, box, _cfg(), seed=1)
    assert rec.exit_time == 0.0
    assert np.array_equal(rec.exit_state, x0)
    out = run_ensemble(lambda m: ExitProbe(m, box), x0, ID2, IDX, 64,
                       _cfg(), seed=1, box=box)
    assert np.all(out["exit_time"] == 0.0)
    assert np.all(out["exit_state"] == x0)


def test_exit_states_outside_pre_exit_inside():
    box = AnisotropicBox(np.zeros(2), 0.3, IDX)
    out = _exit_outputs(2000, 21)
    live = ~out["censored"]
    assert live.mean() > 0.9  # horizon generous enough at this scale
    states = out["exit_state"][live]
    pre = out["pre_exit_state"][live]
    assert not np.any(box.contains(states))
    assert np.all(box.contains(pre))
    assert np.all(out["exit_time"][live] > 0.0)


def test_refinement_bias_below_ci_width():
    # halving the step must move the mean exit time by less than the 95%
    # interval width; monitored exits are seen late on coarse grids
    idx = IDX
    r = 0.2
    box = AnisotropicBox(np.zeros(2), r, idx)
    unit = r ** idx.alpha_max
    n = 100_000

    def mean_tau(steps, seed):
        cfg = SimulationConfig(dt=unit / steps, horizon=32 * unit,
                               n_threads=4)
        out = run_ensemble(lambda m: ExitProbe(m, box), np.zeros(2), ID2,
                           idx, n, cfg, seed, box=box)
        ok = ~out["censored"]
        assert ok.mean() > 0.999
        tau = out["exit_time"][ok]
        return tau.mean(), tau.std(ddof=1) / math.sqrt(ok.sum())

    m1, se1 = mean_tau(128, 314)
    m2, se2 = mean_tau(256, 315)
    assert abs(m1 - m2) < 2.0 * 1.96 * max(se1, se2)


# ---------------------------------------------------------------------------
# hits


def test_hit_at_start_when_target_contains_x0():
    box = AnisotropicBox(np.zeros(2), 0.4, IDX)
    target = AxisAlignedSet.from_box(box.dilated(0.5))
    rec = first_hit(np.zeros(2), ID2, IDX, target, box, _cfg(), seed=3)
    assert rec.hit_time == 0.0
    assert np.array_equal(rec.hit_state, np.zeros(2))


def test_disjoint_target_never_hit():
    box = AnisotropicBox(np.zeros(2), 0.2, IDX)
    target = AxisAlignedSet.from_bounds([10.0, 10.0], [11.0, 11.0])
    out = run_ensemble(lambda m: HitProbe(m, box, target), np.zeros(2), ID2,
                       IDX, 500, _cfg(), seed=4, box=box)
    assert not np.any(out["hit"])


def test_hit_probability_positive_from_offset_start():
    # start inside the box but outside the half-dilation target: some paths
    # wander in before exiting, none of them trivially at t = 0
    box = AnisotropicBox(np.zeros(2), 0.4, IDX)
    target = AxisAlignedSet.from_box(box.dilated(0.5))
    hw = box.halfwidths
    x0 = np.array([0.75 * hw[0], 0.0])
    assert not target.contains(x0)
    n = 10_000
    out = run_ensemble(lambda m: HitProbe(m, box, target), x0, ID2, IDX, n,
                       _cfg(), seed=5, box=box)
    k = int(out["hit"].sum())
    assert 0 < k < n
    p = k / n
    lo = p - 1.96 * math.sqrt(p * (1 - p) / n)
    assert lo > 0.0
    hit_times = out["hit_time"][out["hit"]]
    assert np.all(hit_times > 0.0)


def test_hit_trivial_when_started_in_target():
    # the documented half-dilation case: x0 in the target means every path
    # hits at time zero, and the lower CI bound is positive by construction
    box = AnisotropicBox(np.zeros(2), 0.4, IDX)
    target = AxisAlignedSet.from_box(box.dilated(0.5))
    n = 10_000
    out = run_ensemble(lambda m: HitProbe(m, box, target), np.zeros(2), ID2,
                       IDX, n, _cfg(), seed=6, box=box)
    assert np.all(out["hit"])
    assert np.all(out["hit_time"] == 0.0)


# ---------------------------------------------------------------------------
# transition counting


def test_count_transitions_no_marks():
    # threshold too large for any big jump over a short horizon
    traj = simulate_path(np.zeros(2), ID2, IDX,
                         _cfg(jump_threshold=1e6, horizon=0.125, dt=1 / 64.0),
                         seed=9)
    assert traj.marks == []
    d_set = AxisAlignedSet.from_bounds([-1.0, -1.0], [1.0, 1.0])
    e_set = AxisAlignedSet.from_bounds([2.0, 2.0], [3.0, 3.0])
    assert count_transitions(traj, d_set, e_set) == 0


def test_count_transitions_unreachable_target():
    traj = simulate_path(np.zeros(2), ID2, IDX, _cfg(jump_threshold=0.2),
                         seed=10)
    assert len(traj.marks) > 0
    d_set = AxisAlignedSet.from_bounds([-50.0, -50.0], [50.0, 50.0])
    far = AxisAlignedSet.from_bounds([1e9, -1.0], [1e9 + 1.0, 1.0])
    assert count_transitions(traj, d_set, far) == 0


def test_count_transitions_counts_marked_moves():
    traj = simulate_path(np.zeros(2), ID2, IDX, _cfg(jump_threshold=0.2),
                         seed=12)
    everything = AxisAlignedSet.from_bounds([-math.inf, -math.inf],
                                            [math.inf, math.inf])
    assert count_transitions(traj, everything, everything) == len(traj.marks)


def test_trajectory_shape_validation():
    with pytest.raises(ConfigurationError):
        Trajectory(times=np.zeros(3), states=np.zeros((2, 2)), marks=[])
