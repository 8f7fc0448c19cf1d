"""Anisotropic rectangles, the matching quasi-metric, and projection helpers.

A system whose axes carry distinct stability indices has no natural
Euclidean scale: axis i moves on the scale t**(1/alpha_i).  The anisotropic
rectangle of radius r therefore has per-axis halfwidth r**(alpha_max /
alpha_i), so that the exit time from radius r scales like r**alpha_max
regardless of the axis that triggers the exit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .drivers import StableIndexSet
from .errors import ConfigurationError

__all__ = [
    "AnisotropicBox",
    "box_halfwidths",
    "aniso_metric",
    "project_onto",
    "best_column_projection",
    "AxisAlignedSet",
]


@dataclass(frozen=True)
class AnisotropicBox:
    """Open anisotropic rectangle M_r^k(center).

    Axis i extends center_i +/- k * r**(alpha_max / alpha_i).  The box is
    open: points on the boundary are outside.  The radius is restricted to
    (0, 1] so that radius and the anisotropic distance agree (see
    :func:`aniso_metric`); the dilation factor k is any positive real.
    """

    center: np.ndarray
    r: float
    indices: StableIndexSet
    k: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.ndim != 1 or c.shape[0] != self.indices.dim:
            raise ConfigurationError(
                f"center has shape {c.shape}, expected ({self.indices.dim},)")
        object.__setattr__(self, "center", c)
        if not 0.0 < self.r <= 1.0:
            raise ConfigurationError(f"radius must lie in (0, 1], got {self.r}")
        if self.k <= 0.0:
            raise ConfigurationError(f"dilation must be positive, got {self.k}")

    @cached_property
    def halfwidths(self) -> np.ndarray:
        amax = self.indices.alpha_max
        exps = np.array([amax / a for a in self.indices.alphas])
        return self.k * self.r ** exps

    def contains(self, points) -> np.ndarray | bool:
        """Strict membership; accepts a single point (d,) or a batch (n, d)."""
        pts = np.asarray(points, dtype=float)
        inside = np.all(np.abs(pts - self.center) < self.halfwidths, axis=-1)
        return bool(inside) if pts.ndim == 1 else inside

    def dilated(self, factor: float) -> "AnisotropicBox":
        """The concentric box with dilation k * factor."""
        return AnisotropicBox(self.center, self.r, self.indices, self.k * factor)

    def lattice(self, points_per_axis: int, margin: float = 0.0) -> np.ndarray:
        """Regular grid over the box, spaced anisotropically like the box itself.

        margin shrinks the grid away from the boundary by that fraction of
        each halfwidth.  Returns an (points_per_axis**d, d) array.
        """
        if points_per_axis < 1:
            raise ConfigurationError("points_per_axis must be >= 1")
        hw = self.halfwidths * (1.0 - margin)
        axes = [np.linspace(c - w, c + w, points_per_axis)
                for c, w in zip(self.center, hw)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


def box_halfwidths(box: AnisotropicBox) -> np.ndarray:
    """Per-axis halfwidths k * r**(alpha_max / alpha_i) of an anisotropic box."""
    return box.halfwidths.copy()


def aniso_metric(x, y, indices: StableIndexSet) -> float:
    """Anisotropic distance sup_i |x_i - y_i|**(alpha_i / alpha_max), capped at 1.

    Coordinate gaps above 1 contribute exactly 1, so the distance never
    exceeds 1.  For r in (0, 1], membership in the open box of radius r is
    equivalent to distance < r.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.shape[-1] != indices.dim:
        raise ConfigurationError(
            f"points of shape {x.shape} and {y.shape} do not match dim {indices.dim}")
    gaps = np.abs(x - y)
    amax = indices.alpha_max
    exps = np.array([a / amax for a in indices.alphas])
    terms = np.where(gaps <= 1.0, gaps ** exps, 1.0)
    out = terms.max(axis=-1)
    return float(out) if out.ndim == 0 else out


def project_onto(v, u) -> np.ndarray:
    """Orthogonal projection of v onto the line spanned by u.

    If the projection keeps a fraction eta of |v| then the residual is at
    most sqrt(1 - eta**2) * |v|; this is the Pythagorean identity and is
    what makes column projections useful for steering jump directions.
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    uu = float(u @ u)
    if uu <= 0.0:
        raise ConfigurationError("cannot project onto the zero vector")
    return (float(v @ u) / uu) * u


def best_column_projection(matrix, v):
    """Column of ``matrix`` whose span best captures v.

    Returns (axis, projection, ratio) where ratio = |v - p| / |v| is the
    relative residual, minimized over columns; ties go to the smallest axis
    index.  For an invertible matrix the columns span the space, so the
    ratio is strictly below 1 for every nonzero v.

    Raises
    ------
    ConfigurationError
        If v is zero or the matrix is singular.
    """
    a = np.asarray(matrix, dtype=float)
    v = np.asarray(v, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != v.shape[0]:
        raise ConfigurationError(f"matrix shape {a.shape} does not fit v {v.shape}")
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        raise ConfigurationError("direction vector must be nonzero")
    if abs(np.linalg.det(a)) < 1e-300:
        raise ConfigurationError("matrix is singular")
    best = None
    for k in range(a.shape[1]):
        p = project_onto(v, a[:, k])
        ratio = float(np.linalg.norm(v - p)) / vnorm
        if best is None or ratio < best[2] - 1e-15:
            best = (k, p, ratio)
    return best


@dataclass(frozen=True)
class AxisAlignedSet:
    """Finite union of axis-aligned rectangles with open interval slices.

    Each member is a pair (lo, hi) of d-vectors; entries may be -inf/+inf
    (slabs, half-spaces) and an axis with lo == hi is a degenerate slice
    matched by equality.  Members are assumed pairwise disjoint: jump-measure
    masses of the union are computed additively.
    """

    boxes: tuple

    def __post_init__(self):
        norm = []
        for lo, hi in self.boxes:
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            if lo.shape != hi.shape or lo.ndim != 1:
                raise ConfigurationError("each member needs matching (lo, hi) vectors")
            if np.any(lo > hi):
                raise ConfigurationError(f"empty slice: lo={lo}, hi={hi}")
            norm.append((lo, hi))
        object.__setattr__(self, "boxes", tuple(norm))
        if not self.boxes:
            raise ConfigurationError("set needs at least one member rectangle")

    @property
    def dim(self) -> int:
        return self.boxes[0][0].shape[0]

    @classmethod
    def from_bounds(cls, lo, hi) -> "AxisAlignedSet":
        return cls(((lo, hi),))

    @classmethod
    def half_space(cls, axis: int, threshold: float, dim: int,
                   side: str = "above") -> "AxisAlignedSet":
        lo = np.full(dim, -math.inf)
        hi = np.full(dim, math.inf)
        if side == "above":
            lo[axis] = threshold
        elif side == "below":
            hi[axis] = threshold
        else:
            raise ConfigurationError(f"side must be 'above' or 'below', got {side!r}")
        return cls(((lo, hi),))

    @classmethod
    def from_box(cls, box: AnisotropicBox) -> "AxisAlignedSet":
        hw = box.halfwidths
        return cls(((box.center - hw, box.center + hw),))

    def contains(self, points) -> np.ndarray | bool:
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        inside = np.zeros(pts.shape[0], dtype=bool)
        for lo, hi in self.boxes:
            degenerate = lo == hi
            ok = np.ones(pts.shape[0], dtype=bool)
            for i in range(self.dim):
                if degenerate[i]:
                    ok &= pts[:, i] == lo[i]
                else:
                    ok &= (pts[:, i] > lo[i]) & (pts[:, i] < hi[i])
            inside |= ok
        return bool(inside[0]) if single else inside

    def distance(self, points) -> np.ndarray | float:
        """Euclidean distance from point(s) to the union (0 inside)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        best = np.full(pts.shape[0], math.inf)
        for lo, hi in self.boxes:
            gap = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
            best = np.minimum(best, np.sqrt((gap ** 2).sum(axis=1)))
        return float(best[0]) if single else best

    def gap_to(self, other: "AxisAlignedSet") -> float:
        """Euclidean distance between two unions of rectangles."""
        best = math.inf
        for lo_a, hi_a in self.boxes:
            for lo_b, hi_b in other.boxes:
                gap = np.maximum(np.maximum(lo_b - hi_a, lo_a - hi_b), 0.0)
                best = min(best, float(np.sqrt((gap ** 2).sum())))
        return best
