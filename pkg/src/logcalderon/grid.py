"""Uniform cell grids, region bookkeeping and piecewise-constant fields.

Cells are indexed in C order over the axis multi-index, so in 2D the flat
index is ``i0 * cells_per_axis[1] + i1``.  A region spec is either a
sequence of flat cell indices, a dict ``{"box": [lo, hi]}`` selecting
every cell whose center lies in the closed box ``[lo, hi]``, a dict
``{"boxes": [[lo, hi], ...]}`` for a union of such boxes, or a callable
mapping the (num_cells, n) array of centers to a boolean mask.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .constants import SUPPORTED_DIMENSIONS

RegionSpec = Union[Sequence[int], Mapping, Callable[[np.ndarray], np.ndarray]]

_CENTER_SLACK = 1e-9


class RegionError(ValueError):
    """Invalid grid or region definition."""


@dataclass(frozen=True)
class Grid:
    n: int
    box_min: tuple
    box_max: tuple
    cells_per_axis: tuple
    h: float

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @cached_property
    def cell_index(self) -> np.ndarray:
        """Integer multi-index of every cell, shape (num_cells, n)."""
        idx = np.indices(self.cells_per_axis).reshape(self.n, -1).T
        return np.ascontiguousarray(idx)

    @cached_property
    def cell_centers(self) -> np.ndarray:
        return np.asarray(self.box_min) + (self.cell_index + 0.5) * self.h

    @cached_property
    def grid_hash(self) -> str:
        payload = json.dumps(
            {
                "n": self.n,
                "box_min": [float(v) for v in self.box_min],
                "box_max": [float(v) for v in self.box_max],
                "cells": [int(v) for v in self.cells_per_axis],
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "box": [list(map(float, self.box_min)), list(map(float, self.box_max))],
            "cells_per_axis": list(map(int, self.cells_per_axis)),
            "h": self.h,
            "grid_hash": self.grid_hash,
        }


def build_grid(box, cells_per_axis) -> Grid:
    """Uniform grid of cubic cells.

    ``box`` is ``[lo, hi]`` in 1D or ``[[lo0, lo1], [hi0, hi1]]`` in 2D;
    ``cells_per_axis`` an int (1D) or a sequence with one entry per axis.
    """
    lo = np.atleast_1d(np.asarray(box[0], dtype=float))
    hi = np.atleast_1d(np.asarray(box[1], dtype=float))
    if lo.shape != hi.shape or lo.ndim != 1:
        raise RegionError(f"malformed box {box!r}")
    n = lo.size
    if n not in SUPPORTED_DIMENSIONS:
        raise RegionError(f"unsupported dimension n={n}; only 1 and 2 are implemented")
    cells = tuple(int(c) for c in np.atleast_1d(cells_per_axis))
    if len(cells) != n or any(c < 1 for c in cells):
        raise RegionError(f"cells_per_axis={cells_per_axis!r} must give one positive count per axis")
    if np.any(hi <= lo):
        raise RegionError(f"degenerate box {box!r}")
    widths = (hi - lo) / np.asarray(cells)
    h = float(widths[0])
    if not np.allclose(widths, h, rtol=1e-12, atol=0.0):
        raise RegionError(f"cells must be cubic, got side lengths {widths.tolist()}")
    if h >= 0.5:
        raise RegionError(
            f"cell side h={h:g} must be < 1/2; increase cells_per_axis to refine the grid"
        )
    return Grid(n=n, box_min=tuple(lo.tolist()), box_max=tuple(hi.tolist()), cells_per_axis=cells, h=h)


def resolve_cells(grid: Grid, spec: RegionSpec) -> np.ndarray:
    """Sorted unique flat indices selected by ``spec``."""
    if callable(spec):
        mask = np.asarray(spec(grid.cell_centers), dtype=bool)
        return np.flatnonzero(mask)
    if isinstance(spec, Mapping):
        if set(spec) == {"box"}:
            boxes = [spec["box"]]
        elif set(spec) == {"boxes"}:
            boxes = list(spec["boxes"])
        else:
            raise RegionError(
                f"region spec must be an index list, {{'box': [lo, hi]}} or {{'boxes': [...]}}, got {spec!r}"
            )
        c = grid.cell_centers
        mask = np.zeros(grid.num_cells, dtype=bool)
        for box in boxes:
            lo = np.atleast_1d(np.asarray(box[0], dtype=float))
            hi = np.atleast_1d(np.asarray(box[1], dtype=float))
            if lo.shape != (grid.n,) or hi.shape != (grid.n,):
                raise RegionError(f"region box {box!r} does not match dimension {grid.n}")
            mask |= np.all((c >= lo - _CENTER_SLACK) & (c <= hi + _CENTER_SLACK), axis=1)
        return np.flatnonzero(mask)
    idx = np.unique(np.asarray(list(spec), dtype=int))
    if idx.size and (idx.min() < 0 or idx.max() >= grid.num_cells):
        raise RegionError(f"cell indices out of range [0, {grid.num_cells})")
    return idx


@dataclass(frozen=True)
class RegionSet:
    omega: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    partition: tuple = field(default_factory=tuple)

    @cached_property
    def windows(self) -> np.ndarray:
        """Union of both measurement windows (the exterior data carriers)."""
        return np.union1d(self.w1, self.w2)

    def block_of(self, k: int) -> np.ndarray:
        return self.partition[k]

    def to_dict(self) -> dict:
        return {
            "omega": self.omega.tolist(),
            "w1": self.w1.tolist(),
            "w2": self.w2.tolist(),
            "partition": [b.tolist() for b in self.partition],
        }


def _split_blocks(grid: Grid, omega: np.ndarray, blocks_per_axis) -> list:
    blocks_per_axis = [int(b) for b in np.atleast_1d(blocks_per_axis)]
    if len(blocks_per_axis) != grid.n:
        raise RegionError("blocks_per_axis needs one entry per axis")
    idx = grid.cell_index[omega]
    lo, hi = idx.min(axis=0), idx.max(axis=0) + 1
    edges = [np.linspace(lo[k], hi[k], blocks_per_axis[k] + 1) for k in range(grid.n)]
    labels = np.zeros(omega.size, dtype=int)
    for k in range(grid.n):
        pos = np.searchsorted(edges[k], idx[:, k], side="right") - 1
        labels = labels * blocks_per_axis[k] + np.clip(pos, 0, blocks_per_axis[k] - 1)
    return [omega[labels == b] for b in range(int(np.prod(blocks_per_axis)))]


def _gap_violations(grid: Grid, omega: np.ndarray, window: np.ndarray) -> list:
    """Pairs (window cell, omega cell) closer than one cell width."""
    if omega.size == 0 or window.size == 0:
        return []
    diff = np.abs(grid.cell_index[window][:, None, :] - grid.cell_index[omega][None, :, :])
    # closed cells are >= h apart iff some axis offset is >= 2
    touching = np.all(diff <= 1, axis=2)
    wi, oi = np.nonzero(touching)
    return [(int(window[a]), int(omega[b])) for a, b in zip(wi, oi)]


def define_regions(
    grid: Grid,
    omega_spec: RegionSpec,
    w1_spec: RegionSpec,
    w2_spec: RegionSpec | None = None,
    partition_spec=None,
) -> RegionSet:
    """Resolve and validate Omega, the two windows and the Omega partition.

    ``partition_spec`` is ``None`` (one block), a list of region specs, or
    ``{"blocks_per_axis": [...]}`` for equal sub-boxes of Omega's cell range.
    """
    omega = resolve_cells(grid, omega_spec)
    w1 = resolve_cells(grid, w1_spec)
    w2 = w1 if w2_spec is None else resolve_cells(grid, w2_spec)
    if omega.size == 0:
        raise RegionError("Omega selects no cells")
    if w1.size == 0 or w2.size == 0:
        raise RegionError("measurement windows must be nonempty")
    for name, win in (("W1", w1), ("W2", w2)):
        overlap = np.intersect1d(omega, win)
        if overlap.size:
            raise RegionError(f"{name} overlaps Omega in cells {overlap.tolist()}")
        bad = _gap_violations(grid, omega, win)
        if bad:
            raise RegionError(
                f"{name} cells touch Omega (need a gap of at least one cell); "
                f"offending (window, omega) pairs: {bad[:8]}"
            )

    if partition_spec is None:
        blocks = [omega]
    elif isinstance(partition_spec, Mapping):
        if set(partition_spec) != {"blocks_per_axis"}:
            raise RegionError(f"unknown partition spec {partition_spec!r}")
        blocks = _split_blocks(grid, omega, partition_spec["blocks_per_axis"])
    else:
        blocks = [resolve_cells(grid, b) for b in partition_spec]

    seen = np.concatenate(blocks) if blocks else np.array([], dtype=int)
    if any(b.size == 0 for b in blocks):
        raise RegionError("partition contains an empty block")
    if seen.size != np.unique(seen).size:
        raise RegionError("partition blocks overlap")
    if not np.array_equal(np.sort(seen), omega):
        raise RegionError("partition blocks must cover Omega exactly")
    return RegionSet(omega=omega, w1=w1, w2=w2, partition=tuple(np.sort(b) for b in blocks))


@dataclass(frozen=True)
class CellField:
    """Piecewise-constant function: one value per grid cell, zero off ``mask``."""

    values: np.ndarray
    support: str
    mask: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        m = np.asarray(self.mask, dtype=bool)
        if v.shape != m.shape:
            raise ValueError("values and mask must have the same shape")
        if not np.all(np.isfinite(v)):
            raise ValueError("cell field values must be finite")
        if np.any(v[~m] != 0.0):
            raise ValueError(f"field tagged '{self.support}' carries values outside its support")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", m)

    @classmethod
    def on(cls, grid: Grid, cells, values, support: str) -> "CellField":
        cells = np.asarray(cells, dtype=int)
        full = np.zeros(grid.num_cells)
        full[cells] = values
        mask = np.zeros(grid.num_cells, dtype=bool)
        mask[cells] = True
        return cls(full, support, mask)

    @classmethod
    def zeros(cls, grid: Grid, cells, support: str) -> "CellField":
        return cls.on(grid, cells, 0.0, support)

    def __add__(self, other: "CellField") -> "CellField":
        return CellField(self.values + other.values, self.support, self.mask | other.mask)

    def __mul__(self, scalar: float) -> "CellField":
        return CellField(self.values * float(scalar), self.support, self.mask)

    __rmul__ = __mul__
