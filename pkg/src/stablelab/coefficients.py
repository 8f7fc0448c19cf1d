"""State-dependent coefficient matrices A(x) and their diagnostics.

The scheme only ever multiplies driver increments by columns of A evaluated
at left limits, so a field needs to provide batched evaluation; inverses,
bounds and moduli of continuity are diagnostic extras used by validity
checks.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, SimulationError

__all__ = [
    "CoefficientField",
    "identity_field",
    "constant_field",
    "diagonal_field",
    "rotation_field",
    "FIELD_PRESETS",
    "build_field",
]

_DET_FLOOR = 1e-12


class CoefficientField:
    """Matrix-valued field x -> A(x) with nondegenerate values.

    Parameters
    ----------
    matrix_fn : callable
        Maps a batch of states (n, d) to matrices (n, d, d).
    dim : int
        State dimension d.
    name : str
        Short label used in reports and error messages.
    constant : numpy.ndarray, optional
        If the field is constant, its single value; enables fast paths.
    check : bool
        Verify |det A(x)| at every batched evaluation (cheap for small d).
    """

    def __init__(self, matrix_fn, dim, name, constant=None, check=True):
        self._fn = matrix_fn
        self.dim = int(dim)
        self.name = str(name)
        self.check = bool(check)
        self.constant = None
        if constant is not None:
            m = np.asarray(constant, dtype=float)
            if m.shape != (self.dim, self.dim):
                raise ConfigurationError(
                    f"constant matrix has shape {m.shape}, expected {(dim, dim)}")
            if abs(np.linalg.det(m)) < _DET_FLOOR:
                raise ConfigurationError(f"matrix of field {name!r} is singular")
            self.constant = m

    @property
    def is_identity(self) -> bool:
        return self.constant is not None and np.array_equal(
            self.constant, np.eye(self.dim))

    def evaluate(self, x) -> np.ndarray:
        """A(x) for a single state x of shape (d,)."""
        return self.evaluate_batch(np.asarray(x, dtype=float)[None, :])[0]

    def evaluate_batch(self, points) -> np.ndarray:
        """A at each row of an (n, d) batch; returns (n, d, d)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ConfigurationError(
                f"batch has shape {pts.shape}, expected (n, {self.dim})")
        if self.constant is not None:
            return np.broadcast_to(self.constant, (pts.shape[0], self.dim, self.dim))
        out = np.asarray(self._fn(pts), dtype=float)
        if out.shape != (pts.shape[0], self.dim, self.dim):
            raise SimulationError(
                f"field {self.name!r} returned shape {out.shape}")
        if self.check:
            dets = np.linalg.det(out)
            bad = np.abs(dets) < _DET_FLOOR
            if np.any(bad):
                where = pts[np.argmax(bad)]
                raise SimulationError(
                    f"field {self.name!r} is singular near x={where}")
        return out

    def inverse_evaluate(self, x) -> np.ndarray:
        a = self.evaluate(x)
        if abs(np.linalg.det(a)) < _DET_FLOOR:
            raise SimulationError(f"field {self.name!r} is singular at x={x}")
        return np.linalg.inv(a)

    def bound(self, box, points_per_axis: int = 9) -> float:
        """Entrywise sup bound of A and its inverse over a sampled lattice."""
        pts = box.lattice(points_per_axis)
        mats = self.evaluate_batch(pts)
        invs = np.linalg.inv(mats)
        return float(max(np.abs(mats).max(), np.abs(invs).max()))

    def column_bound(self, box, points_per_axis: int = 9) -> float:
        """Largest Euclidean column norm of A over a sampled lattice."""
        mats = self.evaluate_batch(box.lattice(points_per_axis))
        return float(np.sqrt((mats ** 2).sum(axis=1)).max())

    def modulus(self, box, eps: float, points_per_axis: int = 7) -> float:
        """Sampled modulus of continuity: sup |A(x) - A(y)| over |x-y| <= eps."""
        if self.constant is not None:
            return 0.0
        pts = box.lattice(points_per_axis)
        base = self.evaluate_batch(pts)
        worst = 0.0
        rng = np.random.default_rng(0)  # diagnostic only; fixed probe directions
        for _ in range(8):
            step = rng.standard_normal(pts.shape)
            step *= eps / np.maximum(np.linalg.norm(step, axis=1, keepdims=True), 1e-300)
            shifted = self.evaluate_batch(pts + step)
            worst = max(worst, float(np.abs(shifted - base).max()))
        return worst


def identity_field(dim: int) -> CoefficientField:
    return CoefficientField(None, dim, "identity", constant=np.eye(dim))


def constant_field(matrix) -> CoefficientField:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"expected a square matrix, got shape {m.shape}")
    return CoefficientField(None, m.shape[0], "constant", constant=m)


def diagonal_field(diag) -> CoefficientField:
    d = np.asarray(diag, dtype=float)
    if d.ndim != 1:
        raise ConfigurationError("diagonal must be a vector")
    return CoefficientField(None, d.shape[0], "diagonal", constant=np.diag(d))


def rotation_field(theta0=0.0, amplitude=0.5, frequency=1.0) -> CoefficientField:
    """Planar rotation by the smooth angle theta0 + amplitude*sin(frequency*(x1+x2)).

    Orthogonal values, so the field and its inverse share the same bound and
    the nondegeneracy assumption holds with det = 1 everywhere.
    """

    def fn(pts):
        theta = theta0 + amplitude * np.sin(frequency * (pts[:, 0] + pts[:, 1]))
        c, s = np.cos(theta), np.sin(theta)
        out = np.empty((pts.shape[0], 2, 2))
        out[:, 0, 0] = c
        out[:, 0, 1] = -s
        out[:, 1, 0] = s
        out[:, 1, 1] = c
        return out

    return CoefficientField(fn, 2, "rotation", check=False)


FIELD_PRESETS = {
    "identity": lambda params, dim: identity_field(dim),
    "constant": lambda params, dim: constant_field(params["matrix"]),
    "diagonal": lambda params, dim: diagonal_field(params["diagonal"]),
    "rotation": lambda params, dim: rotation_field(
        params.get("theta0", 0.0),
        params.get("amplitude", 0.5),
        params.get("frequency", 1.0)),
}


def build_field(preset: str, params: dict, dim: int) -> CoefficientField:
    if preset not in FIELD_PRESETS:
        raise ConfigurationError(
            f"unknown coefficient preset {preset!r}; "
            f"choose from {sorted(FIELD_PRESETS)}")
    field = FIELD_PRESETS[preset](params or {}, dim)
    if field.dim != dim:
        raise ConfigurationError(
            f"preset {preset!r} yields dimension {field.dim}, system has {dim}")
    return field
