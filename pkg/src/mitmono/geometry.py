"""Conducting plate, resistivity maps, cell sets and source coils.

The conductor is a thin rectangular plate of ``nx * ny`` square cells of edge
``h`` and thickness ``d``, lying in ``z in [-d/2, d/2]``. Cell ``(ix, iy)`` has
flat index ``iy * nx + ix``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    h: float
    d: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValidationError(
                f"grid needs nx >= 2 and ny >= 2, got ({self.nx}, {self.ny})", "grid"
            )
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValidationError(f"cell edge must be positive, got {self.h}", "grid.h")
        if not (np.isfinite(self.d) and self.d > 0):
            raise ValidationError(f"thickness must be positive, got {self.d}", "grid.d")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_loops(self) -> int:
        return (self.nx - 1) * (self.ny - 1)

    def cell_index(self, ix: int, iy: int) -> int:
        return iy * self.nx + ix

    def cell_center(self, ix, iy):
        ox, oy = self.origin
        return np.array([ox + (ix + 0.5) * self.h, oy + (iy + 0.5) * self.h, 0.0])

    def bounds(self):
        """Axis-aligned box ``(lo, hi)`` occupied by the plate."""
        ox, oy = self.origin
        lo = np.array([ox, oy, -self.d / 2])
        hi = np.array([ox + self.nx * self.h, oy + self.ny * self.h, self.d / 2])
        return lo, hi


def build_grid(nx, ny, h, d, origin=(0.0, 0.0)) -> GridSpec:
    return GridSpec(int(nx), int(ny), float(h), float(d), tuple(origin))


@dataclass(frozen=True)
class CellSet:
    """Sorted, duplicate-free set of flat cell indices."""

    cells: tuple[int, ...] = ()

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        if len(set(cells)) != len(cells):
            raise ValidationError("duplicate cell indices", "cells")
        object.__setattr__(self, "cells", tuple(sorted(cells)))

    @classmethod
    def of(cls, cells: Iterable[int]) -> "CellSet":
        return cls(tuple(sorted(set(int(c) for c in cells))))

    @classmethod
    def rect(cls, grid: GridSpec, ix0, iy0, w, h) -> "CellSet":
        """Cells of a ``w x h`` block with lower-left cell ``(ix0, iy0)``, clipped to the grid."""
        xs = range(max(ix0, 0), min(ix0 + w, grid.nx))
        ys = range(max(iy0, 0), min(iy0 + h, grid.ny))
        return cls(tuple(grid.cell_index(ix, iy) for iy in ys for ix in xs))

    def validate_for(self, grid: GridSpec, field_name="cells"):
        for c in self.cells:
            if not 0 <= c < grid.n_cells:
                raise ValidationError(
                    f"cell index {c} out of range [0, {grid.n_cells})", field_name
                )
        return self

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def __contains__(self, c):
        return c in set(self.cells)

    def issubset(self, other: "CellSet") -> bool:
        return set(self.cells) <= set(other.cells)

    def union(self, other: "CellSet") -> "CellSet":
        return CellSet.of(set(self.cells) | set(other.cells))

    def intersection(self, other: "CellSet") -> "CellSet":
        return CellSet.of(set(self.cells) & set(other.cells))


@dataclass(frozen=True)
class ResistivityMap:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValidationError("empty resistivity map", "resistivity")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(v) & (v > 0)))[0])
            raise ValidationError(
                f"resistivity must be positive and finite, cell {bad} has {v[bad]!r}",
                "resistivity",
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @classmethod
    def uniform(cls, grid: GridSpec, eta: float) -> "ResistivityMap":
        return cls(np.full(grid.n_cells, float(eta)))


def make_inclusion_map(grid: GridSpec, eta_bg, inclusion: CellSet, eta_i) -> ResistivityMap:
    """Piecewise-constant map: ``eta_i`` on the inclusion cells, ``eta_bg`` elsewhere."""
    for name, val in (("eta_bg", eta_bg), ("eta_i", eta_i)):
        if not (np.isfinite(val) and val > 0):
            raise ValidationError(f"resistivity must be positive, got {val!r}", name)
    if not isinstance(inclusion, CellSet):
        inclusion = CellSet.of(inclusion)
    inclusion.validate_for(grid, "inclusion")
    values = np.full(grid.n_cells, float(eta_bg))
    values[list(inclusion.cells)] = float(eta_i)
    return ResistivityMap(values)


def cover_with_test_elements(grid: GridSpec, block_w, block_h, stride) -> list[CellSet]:
    """Cover the plate with ``block_w x block_h`` rectangles placed every ``stride`` cells.

    Placements start at 0 along each axis. The step along an axis is capped at
    the block size there, and a final placement flush with the far edge is
    added, so the union is always the whole plate. Blocks are clipped to the
    grid; duplicates are dropped.
    """
    if block_w < 1 or block_h < 1 or stride < 1:
        raise ValidationError("block dimensions and stride must be >= 1", "cover")

    def starts(n, size):
        last = max(n - size, 0)
        s = list(range(0, last + 1, min(stride, size)))
        if s[-1] != last:
            s.append(last)
        return s

    out, seen = [], set()
    for iy in starts(grid.ny, block_h):
        for ix in starts(grid.nx, block_w):
            t = CellSet.rect(grid, ix, iy, block_w, block_h)
            if t.cells not in seen:
                seen.add(t.cells)
                out.append(t)
    return out


@dataclass(frozen=True)
class Coil:
    """Closed planar filament polyline carrying a unit current.

    ``vertices`` is ``(n+1, 3)`` with the last row equal to the first. The
    current circulates in vertex order; ``orientation`` (+1 or -1) flips it.
    """

    vertices: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError("coil vertices must be an (n, 3) array", "coils")
        if not np.all(np.isfinite(v)):
            raise ValidationError("coil vertices must be finite", "coils")
        if v.shape[0] < 2 or not np.array_equal(v[0], v[-1]):
            raise ValidationError("coil polyline must be closed (first vertex = last)", "coils")
        if len({tuple(p) for p in v[:-1]}) < 3:
            raise ValidationError("coil needs at least 3 distinct vertices", "coils")
        if self.orientation not in (1, -1):
            raise ValidationError("orientation must be +1 or -1", "coils")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def segments(self):
        """``(starts, ends)`` of the directed segments, orientation applied."""
        v = self.vertices if self.orientation == 1 else self.vertices[::-1]
        return v[:-1], v[1:]


@dataclass(frozen=True)
class CoilSet:
    coils: tuple[Coil, ...] = field(default_factory=tuple)

    def __post_init__(self):
        coils = tuple(c if isinstance(c, Coil) else Coil(np.asarray(c)) for c in self.coils)
        if not coils:
            raise ValidationError("at least one coil is required", "coils")
        object.__setattr__(self, "coils", coils)

    @property
    def n_s(self) -> int:
        return len(self.coils)

    def __len__(self):
        return len(self.coils)

    def __iter__(self):
        return iter(self.coils)


def polygon_coil(center, radius, n_sides=16, normal_z=True, phase=0.0) -> Coil:
    """Regular polygon coil in a horizontal plane (``normal_z``) around ``center``."""
    center = np.asarray(center, dtype=float)
    ang = phase + 2 * np.pi * np.arange(n_sides + 1) / n_sides
    ang[-1] = ang[0]
    pts = np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros_like(ang)])
    if not normal_z:
        pts = pts[:, [0, 2, 1]]
    return Coil(pts + center)


def _segment_hits_box(p0, p1, lo, hi) -> bool:
    """Slab test: does the closed segment p0-p1 meet the closed box [lo, hi]?"""
    t0, t1 = 0.0, 1.0
    dvec = p1 - p0
    for k in range(3):
        if dvec[k] == 0.0:
            if p0[k] < lo[k] or p0[k] > hi[k]:
                return False
            continue
        a = (lo[k] - p0[k]) / dvec[k]
        b = (hi[k] - p0[k]) / dvec[k]
        if a > b:
            a, b = b, a
        t0, t1 = max(t0, a), min(t1, b)
        if t0 > t1:
            return False
    return True


def check_coils_clear(grid: GridSpec, coils: CoilSet):
    lo, hi = grid.bounds()
    for k, coil in enumerate(coils):
        starts, ends = coil.segments()
        for p0, p1 in zip(starts, ends):
            if _segment_hits_box(p0, p1, lo, hi):
                raise ValidationError(
                    f"coil {k} intersects the conductor plate", f"coils[{k}]"
                )


@dataclass(frozen=True)
class Scenario:
    grid: GridSpec
    eta: ResistivityMap
    coils: CoilSet
    wire_radius: float | None = None

    def __post_init__(self):
        if len(self.eta) != self.grid.n_cells:
            raise ValidationError(
                f"resistivity map has {len(self.eta)} entries, grid has {self.grid.n_cells} cells",
                "resistivity",
            )
        check_coils_clear(self.grid, self.coils)

    @property
    def radius(self) -> float:
        return self.grid.h / 4 if self.wire_radius is None else self.wire_radius

    def with_eta(self, eta: ResistivityMap) -> "Scenario":
        return Scenario(self.grid, eta, self.coils, self.wire_radius)


def default_coils(grid: GridSpec, n_coils: int, lift=None, n_sides=16) -> CoilSet:
    """Circular coils hovering above the plate on a ring around its centre."""
    lo, hi = grid.bounds()
    c = (lo + hi) / 2
    width = min(hi[0] - lo[0], hi[1] - lo[1])
    lift = grid.h if lift is None else lift
    radius = width / 4
    coils = []
    for k in range(n_coils):
        if n_coils == 1:
            off = np.zeros(2)
        else:
            a = 2 * np.pi * k / n_coils
            off = width / 4 * np.array([np.cos(a), np.sin(a)])
        center = np.array([c[0] + off[0], c[1] + off[1], grid.d / 2 + lift])
        coils.append(polygon_coil(center, radius, n_sides))
    return CoilSet(tuple(coils))


def cells_as_rows(values: Sequence[float], grid: GridSpec):
    """Reshape a per-cell vector to ``(ny, nx)`` for display."""
    return np.asarray(values).reshape(grid.ny, grid.nx)
