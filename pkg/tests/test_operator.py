import math

import numpy as np
import pytest

from stablelab import (
    AnisotropicBox,
    AxisAlignedSet,
    ConfigurationError,
    EstimationError,
    QuadratureConfig,
    SimulationConfig,
    StableIndexSet,
    dynkin_check,
    generator_apply,
    jump_intensity,
    jump_intensity_batch,
    levy_system_check,
    symbol_value,
)
from stablelab.coefficients import diagonal_field, identity_field
from stablelab.drivers import interval_tail_mass
from stablelab.operator import Affine, Constant, CosineRidge, LinearCombination

IDX = StableIndexSet([1.0, 1.5])
ID2 = identity_field(2)


# ---------------------------------------------------------------------------
# quadrature plumbing


def test_quadrature_config_validation():
    QuadratureConfig()  # defaults valid
    with pytest.raises(ConfigurationError):
        QuadratureConfig(inner_cut=0.0)
    with pytest.raises(ConfigurationError):
        QuadratureConfig(inner_cut=1.0)
    with pytest.raises(ConfigurationError):
        QuadratureConfig(outer_cut=0.5)
    with pytest.raises(ConfigurationError):
        QuadratureConfig(tolerance=0.0)
    with pytest.raises(ConfigurationError):
        QuadratureConfig(max_refinements=3)


def test_black_box_callable_rejected():
    with pytest.raises(ConfigurationError):
        generator_apply(lambda y: float(np.sum(y)), np.zeros(2), ID2, IDX)


# ---------------------------------------------------------------------------
# generator values


def test_generator_constant_exact_zero():
    res = generator_apply(Constant(3.7), np.array([0.4, -0.1]), ID2, IDX)
    assert res.value == 0.0
    assert res.error_bound == 0.0


def test_generator_affine_exact_zero():
    f = Affine([2.0, -1.0], offset=5.0)
    res = generator_apply(f, np.array([1.0, 1.0]), ID2, IDX)
    assert res.value == 0.0
    assert res.error_bound == 0.0


def test_generator_cosine_symbol_example():
    # plane wave along axis 1 at xi = 2 with alpha_1 = 1: the symbol gives -2
    f = CosineRidge([2.0, 0.0])
    res = generator_apply(f, np.zeros(2), ID2, IDX)
    assert res.value == pytest.approx(-2.0, rel=1e-6)
    assert res.error_bound < 1e-6 * 2.0


@pytest.mark.parametrize("alpha1", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("xi", [0.5, 1.0, 2.0])
def test_generator_matches_symbol_grid(alpha1, xi):
    idx = StableIndexSet([alpha1, 1.9])
    f = CosineRidge([xi, 0.0])
    res = generator_apply(f, np.zeros(2), identity_field(2), idx)
    exact = -(xi ** alpha1)
    assert res.value == pytest.approx(exact, rel=1e-6)
    assert symbol_value([xi, 0.0], np.zeros(2), identity_field(2),
                        idx) == pytest.approx(exact, rel=1e-12)


def test_generator_anchor_and_off_axis_point():
    # the anchor makes the wave peak at x0, so the value there is the symbol
    x0 = np.array([0.7, -0.3])
    f = CosineRidge([0.0, 1.5], anchor=x0)
    res = generator_apply(f, x0, ID2, IDX)
    assert res.value == pytest.approx(-(1.5 ** 1.5), rel=1e-6)


def test_generator_with_constant_matrix():
    # diag(2, 1): column 1 doubles the wave number on axis 1
    field = diagonal_field([2.0, 1.0])
    f = CosineRidge([1.0, 0.0])
    res = generator_apply(f, np.zeros(2), field, IDX)
    assert res.value == pytest.approx(-2.0, rel=1e-6)
    assert symbol_value([1.0, 1.0], np.zeros(2), field, IDX) == pytest.approx(
        -(2.0 + 1.0), rel=1e-12)


def test_generator_linear_in_f():
    rng = np.random.default_rng(2024)
    x = np.array([0.2, 0.1])
    for _ in range(5):
        c1, c2 = rng.uniform(-3, 3, size=2)
        f1 = CosineRidge(rng.uniform(0.3, 2.0, size=2))
        f2 = CosineRidge(rng.uniform(0.3, 2.0, size=2), phase=0.7)
        combo = LinearCombination([(c1, f1), (c2, f2), (1.0, Constant(4.0))])
        lhs = generator_apply(combo, x, ID2, IDX).value
        rhs = (c1 * generator_apply(f1, x, ID2, IDX).value
               + c2 * generator_apply(f2, x, ID2, IDX).value)
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_linear_combination_validation():
    with pytest.raises(ConfigurationError):
        LinearCombination([])


# ---------------------------------------------------------------------------
# jump intensity kappa(x, E)


def _slab(b, x2, dim=2):
    # {y : y_1 > b, y_2 = x2}: a half-line on the axis-1 coordinate line
    lo = np.array([b, x2])
    hi = np.array([math.inf, x2])
    return AxisAlignedSet(((lo, hi),))


def test_kappa_zero_off_all_coordinate_lines():
    x = np.zeros(2)
    target = AxisAlignedSet.from_bounds([2.0, 2.0], [3.0, 3.0])
    assert jump_intensity(x, target, ID2, IDX) == 0.0


def test_kappa_half_line_closed_form():
    # alpha_1 = 1, b = 2: c_1 * b^-1 = 1/(2*pi)
    x = np.array([0.3, -0.7])
    target = _slab(x[0] + 2.0, x[1])
    got = jump_intensity(x, target, ID2, IDX)
    assert got == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)
    assert got == pytest.approx(0.15915494309189535, rel=1e-14)


def test_kappa_doubling_b_halves_rate():
    x = np.zeros(2)
    k2 = jump_intensity(x, _slab(2.0, 0.0), ID2, IDX)
    k4 = jump_intensity(x, _slab(4.0, 0.0), ID2, IDX)
    assert k4 == pytest.approx(0.5 * k2, rel=1e-14)


def test_kappa_matches_interval_tail_mass():
    # bounded window on the axis-1 line pulls back to one h-interval
    x = np.zeros(2)
    target = AxisAlignedSet(((np.array([2.0, 0.0]), np.array([3.0, 0.0])),))
    got = jump_intensity(x, target, ID2, IDX)
    assert got == pytest.approx(interval_tail_mass(1.0, 2.0, 3.0), rel=1e-14)


def test_kappa_negative_side_window():
    # windows behind the point use the reflected interval
    x = np.zeros(2)
    left = AxisAlignedSet(((np.array([-3.0, 0.0]), np.array([-2.0, 0.0])),))
    right = AxisAlignedSet(((np.array([2.0, 0.0]), np.array([3.0, 0.0])),))
    assert jump_intensity(x, left, ID2, IDX) == pytest.approx(
        jump_intensity(x, right, ID2, IDX), rel=1e-14)


def test_kappa_additive_for_disjoint_slices():
    x = np.zeros(2)
    a = AxisAlignedSet(((np.array([2.0, 0.0]), np.array([3.0, 0.0])),))
    b = AxisAlignedSet(((np.array([-5.0, 0.0]), np.array([-3.0, 0.0])),))
    union = AxisAlignedSet(tuple(a.boxes) + tuple(b.boxes))
    assert jump_intensity(x, union, ID2, IDX) == (
        jump_intensity(x, a, ID2, IDX) + jump_intensity(x, b, ID2, IDX))


def test_kappa_diverges_when_set_touches_the_line():
    x = np.zeros(2)
    touching = _slab(-1.0, 0.0)  # h-interval (-1, inf) contains 0
    with pytest.raises(EstimationError):
        jump_intensity(x, touching, ID2, IDX)


def test_kappa_degenerate_slice_unsatisfiable():
    # the slice plane misses the coordinate line: only a null set of jumps
    x = np.zeros(2)
    target = _slab(2.0, 0.5)  # requires y_2 = 0.5, but the line has y_2 = 0
    assert jump_intensity(x, target, ID2, IDX) == 0.0


def test_kappa_batch_matches_scalar():
    rng = np.random.default_rng(3)
    target = AxisAlignedSet.from_bounds([2.0, -0.5], [3.0, 0.5])
    pts = rng.uniform(-0.4, 0.4, size=(50, 2))
    batch = jump_intensity_batch(pts, target, ID2, IDX)
    singles = np.array([jump_intensity(p, target, ID2, IDX) for p in pts])
    assert np.allclose(batch, singles, rtol=1e-14)
    with pytest.raises(ConfigurationError):
        jump_intensity_batch(pts[0], target, ID2, IDX)


def test_kappa_full_rectangle_both_columns():
    # rectangle crossing the axis-2 line as well picks up both drivers
    x = np.zeros(2)
    target = AxisAlignedSet.from_bounds([2.0, -0.5], [3.0, 0.5])
    got = jump_intensity(x, target, ID2, IDX)
    assert got == pytest.approx(interval_tail_mass(1.0, 2.0, 3.0), rel=1e-14)
    tall = AxisAlignedSet.from_bounds([-0.5, 2.0], [0.5, 3.0])
    got2 = jump_intensity(x, tall, ID2, IDX)
    assert got2 == pytest.approx(interval_tail_mass(1.5, 2.0, 3.0), rel=1e-14)


# ---------------------------------------------------------------------------
# Levy system identity


def _levy_config(horizon, dt, threshold):
    return SimulationConfig(dt=dt, horizon=horizon, jump_threshold=threshold)


def test_levy_degenerate_configuration_flagged():
    box = AnisotropicBox(np.zeros(2), 0.3, IDX)
    # off-line rectangle: kappa = 0 on the box and no jump can land in it
    target = AxisAlignedSet.from_bounds([2.0, 2.0], [3.0, 3.0])
    rep = levy_system_check(np.zeros(2), ID2, IDX, box, target,
                            _levy_config(0.05, 0.001, 0.05), 2000, seed=5)
    assert rep.degenerate
    assert rep.mean_count == 0.0
    assert rep.mean_integral == 0.0
    assert rep.z_score == 0.0


def test_levy_requires_gap():
    box = AnisotropicBox(np.zeros(2), 0.3, IDX)
    overlapping = AxisAlignedSet.from_bounds([0.0, -1.0], [2.0, 1.0])
    with pytest.raises(ConfigurationError):
        levy_system_check(np.zeros(2), ID2, IDX, box, overlapping,
                          _levy_config(0.05, 0.001, 0.05), 100, seed=1)


def test_levy_threshold_must_not_bridge_gap():
    box = AnisotropicBox(np.zeros(2), 0.3, IDX)
    target = AxisAlignedSet.half_space(0, 1.3, 2, side="above")
    with pytest.raises(ConfigurationError) as err:
        levy_system_check(np.zeros(2), ID2, IDX, box, target,
                          _levy_config(0.05, 0.001, 2.0), 100, seed=1)
    assert "lower jump_threshold" in str(err.value)


def test_levy_identity_moderate_n():
    # the documented geometry at reduced N: slab one unit past the box face
    box = AnisotropicBox(np.zeros(2), 0.3, IDX)
    face = 0.3 ** 1.5
    target = AxisAlignedSet.half_space(0, face + 1.0, 2, side="above")
    rep = levy_system_check(np.zeros(2), ID2, IDX, box, target,
                            _levy_config(0.25, 0.001, 0.05), 20_000, seed=9)
    assert not rep.degenerate
    assert rep.mean_count > 0.0
    assert abs(rep.z_score) <= 3.0


def test_levy_doubling_horizon_doubles_means():
    # short horizons: occupation saturation is negligible, so both sides
    # of the identity scale linearly in t
    box = AnisotropicBox(np.zeros(2), 0.3, IDX)
    face = 0.3 ** 1.5
    target = AxisAlignedSet.half_space(0, face + 1.0, 2, side="above")
    n = 40_000
    r1 = levy_system_check(np.zeros(2), ID2, IDX, box, target,
                           _levy_config(0.01, 0.0005, 0.05), n, seed=21)
    r2 = levy_system_check(np.zeros(2), ID2, IDX, box, target,
                           _levy_config(0.02, 0.0005, 0.05), n, seed=22)
    assert r2.mean_integral == pytest.approx(2.0 * r1.mean_integral, rel=0.05)
    se = math.sqrt(r2.mean_count / n + 4.0 * r1.mean_count / n)
    assert abs(r2.mean_count - 2.0 * r1.mean_count) <= 3.0 * se


# ---------------------------------------------------------------------------
# Dynkin quotient


def test_dynkin_constant_function():
    reports = dynkin_check(Constant(2.0), np.zeros(2), ID2, IDX,
                           [0.1, 0.01], n_paths=500, seed=3)
    assert len(reports) == 2
    for rep, t in zip(reports, [0.1, 0.01]):
        assert rep.horizon == t
        assert rep.quotient == 0.0
        assert rep.quotient_se == 0.0
        assert rep.generator_value == 0.0
        assert rep.z_score == 0.0


@pytest.mark.parametrize("alphas", [[1.0, 1.5], [0.6, 1.9]])
def test_dynkin_cosine_quotient_matches_symbol(alphas):
    # unit wave number: the generator value is -1 whatever alpha_1 is
    idx = StableIndexSet(alphas)
    x0 = np.array([0.25, -0.4])
    f = CosineRidge([1.0, 0.0], anchor=x0)
    reports = dynkin_check(f, x0, identity_field(2), idx, [0.01],
                           n_paths=20_000, seed=11)
    rep = reports[0]
    assert rep.generator_value == pytest.approx(-1.0, rel=1e-6)
    assert abs(rep.quotient - rep.generator_value) <= 3.0 * rep.quotient_se


def test_dynkin_discrepancy_shrinks_with_t():
    x0 = np.zeros(2)
    f = CosineRidge([1.0, 0.0], anchor=x0)
    reports = dynkin_check(f, x0, ID2, IDX, [0.1, 0.001],
                           n_paths=20_000, seed=13)
    coarse, fine = reports
    d_coarse = abs(coarse.quotient - coarse.generator_value)
    d_fine = abs(fine.quotient - fine.generator_value)
    assert d_fine <= d_coarse + 3.0 * (coarse.quotient_se + fine.quotient_se)


def test_dynkin_validation():
    with pytest.raises(ConfigurationError):
        dynkin_check(Constant(1.0), np.zeros(2), ID2, IDX, [], 100, seed=0)
    with pytest.raises(ConfigurationError):
        dynkin_check(Constant(1.0), np.zeros(2), ID2, IDX, [0.1, -0.1], 100,
                     seed=0)
