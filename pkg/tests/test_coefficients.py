import numpy as np
import pytest

from stablelab import (
    AnisotropicBox,
    ConfigurationError,
    SimulationError,
    StableIndexSet,
    build_field,
)
from stablelab.coefficients import (
    FIELD_PRESETS,
    constant_field,
    diagonal_field,
    identity_field,
    rotation_field,
)

IDX = StableIndexSet([1.0, 1.5])
BOX = AnisotropicBox(np.zeros(2), 0.5, IDX)


def test_identity_field_values():
    f = identity_field(2)
    assert f.is_identity
    assert np.array_equal(f.evaluate([3.0, -1.0]), np.eye(2))
    batch = f.evaluate_batch(np.zeros((5, 2)))
    assert batch.shape == (5, 2, 2)
    assert np.array_equal(batch[4], np.eye(2))


def test_constant_field_round_trip():
    m = np.array([[2.0, 1.0], [0.0, 1.0]])
    f = constant_field(m)
    assert np.array_equal(f.evaluate([0.0, 0.0]), m)
    assert np.allclose(f.evaluate([9.0, 9.0]) @ f.inverse_evaluate([9.0, 9.0]),
                       np.eye(2), atol=1e-10)


def test_diagonal_field():
    f = diagonal_field([2.0, 1.0])
    assert np.array_equal(f.evaluate([0.0, 0.0]), np.diag([2.0, 1.0]))


def test_rotation_field_orthogonal_everywhere():
    f = rotation_field(amplitude=0.7, frequency=2.0)
    pts = np.random.default_rng(5).uniform(-2, 2, size=(50, 2))
    mats = f.evaluate_batch(pts)
    for a in mats:
        assert np.allclose(a @ a.T, np.eye(2), atol=1e-12)
        assert np.linalg.det(a) == pytest.approx(1.0, abs=1e-12)


def test_inverse_identity_at_sampled_points():
    # A(x) @ inverse(x) must be the identity wherever we look
    f = rotation_field()
    rng = np.random.default_rng(17)
    for _ in range(20):
        x = rng.uniform(-3, 3, size=2)
        assert np.allclose(f.evaluate(x) @ f.inverse_evaluate(x), np.eye(2),
                           atol=1e-10)


def test_singular_constant_rejected():
    with pytest.raises(ConfigurationError):
        constant_field([[1.0, 1.0], [1.0, 1.0]])


def test_singular_pointwise_detected():
    def fn(pts):
        out = np.zeros((pts.shape[0], 2, 2))
        out[:, 0, 0] = pts[:, 0]  # singular along x1 = 0
        out[:, 1, 1] = 1.0
        return out

    from stablelab.coefficients import CoefficientField
    f = CoefficientField(fn, 2, "pinch")
    with pytest.raises(SimulationError):
        f.evaluate_batch(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_batch_shape_validation():
    f = identity_field(2)
    with pytest.raises(ConfigurationError):
        f.evaluate_batch(np.zeros((4, 3)))
    with pytest.raises(ConfigurationError):
        f.evaluate_batch(np.zeros(2))


def test_bound_over_box():
    f = diagonal_field([2.0, 0.5])
    # entries of A reach 2, entries of the inverse also reach 2
    assert f.bound(BOX) == pytest.approx(2.0)
    assert f.column_bound(BOX) == pytest.approx(2.0)


def test_modulus_constant_is_zero():
    assert diagonal_field([2.0, 1.0]).modulus(BOX, eps=0.1) == 0.0


def test_modulus_increases_with_eps():
    f = rotation_field(amplitude=1.0, frequency=3.0)
    small = f.modulus(BOX, eps=0.01)
    large = f.modulus(BOX, eps=0.3)
    assert 0.0 < small < large


def test_build_field_presets():
    assert set(FIELD_PRESETS) == {"identity", "constant", "diagonal", "rotation"}
    f = build_field("identity", {}, 2)
    assert f.is_identity
    g = build_field("constant", {"matrix": [[2.0, 0.0], [0.0, 1.0]]}, 2)
    assert np.array_equal(g.evaluate([0, 0]), np.diag([2.0, 1.0]))
    with pytest.raises(ConfigurationError):
        build_field("nope", {}, 2)
    with pytest.raises(ConfigurationError):
        build_field("rotation", {}, 3)  # planar preset, wrong dimension
    with pytest.raises(ConfigurationError):
        build_field("diagonal", {"diagonal": [1.0, 2.0, 3.0]}, 2)
