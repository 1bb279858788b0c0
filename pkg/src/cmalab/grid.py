"""Discretised domains in C^n (n = 1, 2) as uniform real 2n-dimensional grids.

Axes are ordered ``(x1, y1, x2, y2)`` with ``z_j = x_j + i y_j``; every preset
lives in the bounding box ``[-1, 1]^{2n}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

PRESETS = {"disc": 1, "ball": 2, "polydisc": 2}
_ALIASES = {"unit-disc": "disc", "ball-c2": "ball", "ball2": "ball", "unit-ball": "ball",
            "unit-polydisc": "polydisc"}

# smallest admissible fraction of a stencil arm cut off by the boundary
THETA_MIN = 1e-3


class GridSizeError(ValueError):
    pass


class RegionError(ValueError):
    pass


def canonical_preset(name: str) -> str:
    key = name.strip().lower().replace("²", "2").replace("_", "-")
    key = _ALIASES.get(key, key)
    if key not in PRESETS:
        raise ValueError(f"unknown domain preset {name!r}; expected one of {sorted(PRESETS)}")
    return key


@dataclass(frozen=True, eq=False)
class GridDomain:
    preset: str
    resolution: int
    n: int
    shape: tuple
    h: float
    interior_mask: np.ndarray = field(repr=False)
    boundary_mask: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def axis(self) -> np.ndarray:
        c = (self.resolution - 1) // 2
        return (np.arange(self.resolution) - c) / c

    @cached_property
    def coords(self) -> tuple:
        """Full-grid coordinate arrays, one per real axis."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def index(self) -> np.ndarray:
        """Full-grid array mapping a node to its interior ordinal, -1 elsewhere."""
        idx = np.full(self.shape, -1, dtype=np.int64)
        idx[self.interior_mask] = np.arange(self.num_interior)
        return idx

    @property
    def num_interior(self) -> int:
        return int(self.interior_mask.sum())

    @cached_property
    def points(self) -> np.ndarray:
        """Interior node coordinates, shape ``(M, 2n)``."""
        return np.stack([c[self.interior_mask] for c in self.coords], axis=1)

    @cached_property
    def z(self) -> np.ndarray:
        """Interior node complex coordinates, shape ``(M, n)``."""
        p = self.points
        return p[:, 0::2] + 1j * p[:, 1::2]

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def defining_function(self, points: np.ndarray) -> np.ndarray:
        """Continuous psh defining function rho <= 0 on the closed domain."""
        z2 = points[..., 0::2] ** 2 + points[..., 1::2] ** 2
        if self.preset == "polydisc":
            return np.sum(z2 - 1.0, axis=-1)
        return np.sum(z2, axis=-1) - 1.0

    def contains(self, points: np.ndarray) -> np.ndarray:
        z2 = points[..., 0::2] ** 2 + points[..., 1::2] ** 2
        if self.preset == "polydisc":
            return np.max(z2, axis=-1) < 1.0
        return np.sum(z2, axis=-1) < 1.0

    def crossing(self, points: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """Fraction t in (0, 1] of the step ``h * direction`` at which the
        segment leaving ``points`` meets the boundary."""
        d = np.asarray(direction, dtype=float) * self.h
        if self.preset == "polydisc":
            t = np.full(len(points), np.inf)
            for j in range(self.n):
                dj = d[2 * j:2 * j + 2]
                if not dj.any():
                    continue
                t = np.minimum(t, _sphere_root(points[:, 2 * j:2 * j + 2], dj))
        else:
            t = _sphere_root(points, d)
        return np.clip(t, THETA_MIN, 1.0)

    def describe(self) -> dict:
        return {"preset": self.preset, "resolution": self.resolution}

    def compatible(self, other: "GridDomain") -> bool:
        return self is other or (self.preset == other.preset and self.resolution == other.resolution)


def _sphere_root(p: np.ndarray, d: np.ndarray) -> np.ndarray:
    a = d @ d
    b = 2.0 * (p @ d)
    c = np.sum(p * p, axis=1) - 1.0
    disc = np.maximum(b * b - 4 * a * c, 0.0)
    return (-b + np.sqrt(disc)) / (2 * a)


def build_domain(preset: str, resolution: int) -> GridDomain:
    """Build the grid for ``preset`` with ``resolution`` nodes per real axis."""
    preset = canonical_preset(preset)
    if int(resolution) != resolution or resolution < 5 or resolution % 2 == 0:
        raise GridSizeError(f"resolution must be an odd integer >= 5, got {resolution!r}")
    resolution = int(resolution)
    n = PRESETS[preset]
    dim = 2 * n
    c = (resolution - 1) // 2
    h = 1.0 / c
    # classify with exact integer arithmetic: node offsets k satisfy x = k / c
    k = np.arange(resolution) - c
    ks = np.meshgrid(*([k] * dim), indexing="ij")
    z2 = [ks[2 * j] ** 2 + ks[2 * j + 1] ** 2 for j in range(n)]
    if preset == "polydisc":
        interior = np.logical_and.reduce([q < c * c for q in z2])
    else:
        interior = sum(z2) < c * c
    near = np.zeros_like(interior)
    for a in range(dim):
        near |= np.roll(interior, 1, axis=a) | np.roll(interior, -1, axis=a)
    boundary = near & ~interior
    return GridDomain(preset=preset, resolution=resolution, n=n, shape=interior.shape, h=h,
                      interior_mask=interior, boundary_mask=boundary)


# ---------------------------------------------------------------- node sets

@dataclass(frozen=True)
class ClosedBall:
    radius: float
    center: tuple = ()

    def _center(self, dim):
        return np.zeros(dim) if not self.center else np.asarray(self.center, dtype=float)

    def contains(self, points):
        c = self._center(points.shape[1])
        return np.sum((points - c) ** 2, axis=1) <= self.radius ** 2 * (1 + 1e-12)

    def extent(self, dim):
        return float(np.linalg.norm(self._center(dim))) + self.radius


@dataclass(frozen=True)
class Annulus:
    inner: float
    outer: float

    def contains(self, points):
        r2 = np.sum(points ** 2, axis=1)
        tol = 1e-12
        return (r2 >= self.inner ** 2 * (1 - tol)) & (r2 <= self.outer ** 2 * (1 + tol))

    def extent(self, dim):
        return self.outer


@dataclass(frozen=True)
class EmptyRegion:
    def contains(self, points):
        return np.zeros(len(points), dtype=bool)

    def extent(self, dim):
        return 0.0


@dataclass(frozen=True, eq=False)
class NodeSet:
    domain: GridDomain
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(self.mask & ~self.domain.interior_mask):
            raise RegionError("node set must be a subset of the interior nodes")

    @property
    def count(self) -> int:
        return int(self.mask.sum())


def node_set(domain: GridDomain, region) -> NodeSet:
    """Interior nodes lying in a closed region compactly contained in the domain."""
    if region.extent(domain.dim) >= 1.0:
        raise RegionError(f"region {region!r} touches the boundary; K must be compactly contained")
    mask = np.zeros(domain.shape, dtype=bool)
    mask[domain.interior_mask] = region.contains(domain.points)
    return NodeSet(domain, mask)

