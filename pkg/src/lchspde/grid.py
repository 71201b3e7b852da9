"""Lattice geometry, boundary specification and piecewise-constant fields.

Node indexing is little-endian over axes: axis 0 occupies the lowest
``nbits[0]`` bits of the flat node index, axis ``d-1`` the highest.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class Boundary(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Grid:
    """Uniform lattice with ``2**nbits[mu]`` nodes along axis ``mu``."""

    nbits: tuple[int, ...]
    h: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "nbits", tuple(int(b) for b in self.nbits))
        if not self.nbits:
            raise ValueError("grid: at least one axis is required")
        if any(b < 1 for b in self.nbits):
            raise ValueError(f"grid: every axis needs nbits >= 1, got {self.nbits}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"grid: spacing h must be positive, got {self.h}")

    @property
    def d(self) -> int:
        return len(self.nbits)

    @property
    def n_qubits(self) -> int:
        return sum(self.nbits)

    @property
    def n_nodes(self) -> int:
        return 1 << self.n_qubits

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape with the highest axis first (C-order reshape of flat arrays)."""
        return tuple(1 << b for b in reversed(self.nbits))

    def offset(self, axis: int) -> int:
        """Bit offset of ``axis`` inside the flat node index."""
        self._check_axis(axis)
        return sum(self.nbits[:axis])

    def axis_size(self, axis: int) -> int:
        self._check_axis(axis)
        return 1 << self.nbits[axis]

    def coords(self, j: int) -> tuple[int, ...]:
        """Per-axis coordinates ``(x0, x1, ...)`` of flat node ``j``."""
        out = []
        for mu, b in enumerate(self.nbits):
            out.append((j >> self.offset(mu)) & ((1 << b) - 1))
        return tuple(out)

    def index(self, coords: Sequence[int]) -> int:
        if len(coords) != self.d:
            raise ValueError("grid: coordinate length does not match dimension")
        j = 0
        for mu, x in enumerate(coords):
            if not 0 <= x < self.axis_size(mu):
                raise ValueError(f"grid: coordinate {x} out of range on axis {mu}")
            j |= int(x) << self.offset(mu)
        return j

    def axis_coordinate(self, axis: int) -> np.ndarray:
        """Coordinate along ``axis`` for every flat node index."""
        j = np.arange(self.n_nodes)
        return (j >> self.offset(axis)) & ((1 << self.nbits[axis]) - 1)

    def box_indices(self, ranges: Sequence[tuple[int, int]]) -> np.ndarray:
        """Flat indices of the axis-aligned box; ``ranges[mu] = (lo, hi)`` inclusive."""
        if len(ranges) != self.d:
            raise ValueError("grid: box needs one range per axis")
        mask = np.ones(self.n_nodes, dtype=bool)
        for mu, (lo, hi) in enumerate(ranges):
            x = self.axis_coordinate(mu)
            mask &= (x >= lo) & (x <= hi)
        return np.flatnonzero(mask)

    def to_array(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(self.shape)

    def _check_axis(self, axis: int) -> None:
        if not 0 <= axis < self.d:
            raise ValueError(f"grid: axis {axis} out of range for d={self.d}")


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary type per axis and face: ``faces[mu] = (lower, upper)``."""

    faces: tuple[tuple[Boundary, Boundary], ...]

    def __post_init__(self) -> None:
        faces = tuple((Boundary(lo), Boundary(hi)) for lo, hi in self.faces)
        for mu, (lo, hi) in enumerate(faces):
            if (lo is Boundary.PERIODIC) != (hi is Boundary.PERIODIC):
                raise ValueError(f"boundary: axis {mu} is periodic on one face only")
        object.__setattr__(self, "faces", faces)

    @classmethod
    def uniform(cls, d: int, kind: Boundary | str) -> "BoundarySpec":
        return cls(tuple((Boundary(kind), Boundary(kind)) for _ in range(d)))

    def lower(self, axis: int) -> Boundary:
        return self.faces[axis][0]

    def upper(self, axis: int) -> Boundary:
        return self.faces[axis][1]

    def periodic(self, axis: int) -> bool:
        return self.faces[axis][0] is Boundary.PERIODIC


@dataclass(frozen=True)
class PiecewiseField:
    """Node-wise piecewise-constant coefficient.

    ``regions`` holds ``(indices, value)`` pairs with pairwise-disjoint index
    sets; nodes outside every region take ``default``.
    """

    default: float
    regions: tuple[tuple[tuple[int, ...], float], ...] = ()
    name: str = "c"

    def __post_init__(self) -> None:
        seen: set[int] = set()
        regs = []
        for idx, value in self.regions:
            idx = tuple(sorted(int(i) for i in idx))
            if not math.isfinite(value):
                raise ValueError(f"field {self.name}: non-finite region value")
            overlap = seen.intersection(idx)
            if overlap:
                raise ValueError(f"field {self.name}: regions overlap at nodes {sorted(overlap)[:5]}")
            seen.update(idx)
            regs.append((idx, float(value)))
        if not math.isfinite(self.default):
            raise ValueError(f"field {self.name}: non-finite default value")
        object.__setattr__(self, "regions", tuple(regs))
        object.__setattr__(self, "default", float(self.default))

    @classmethod
    def constant(cls, value: float, name: str = "c") -> "PiecewiseField":
        return cls(float(value), (), name)

    @classmethod
    def from_array(cls, values: Iterable[float], default: float | None = None, name: str = "c") -> "PiecewiseField":
        """Group equal node values into regions; the most frequent value becomes the default."""
        values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel()
        uniq, counts = np.unique(values, return_counts=True)
        if default is None:
            default = float(uniq[np.argmax(counts)])
        regions = []
        for u in uniq:
            if u == default:
                continue
            regions.append((tuple(np.flatnonzero(values == u).tolist()), float(u)))
        return cls(float(default), tuple(regions), name)

    def values(self, n_nodes: int) -> np.ndarray:
        out = np.full(n_nodes, self.default, dtype=float)
        for idx, value in self.regions:
            if idx and idx[-1] >= n_nodes:
                raise ValueError(f"field {self.name}: region index {idx[-1]} beyond {n_nodes} nodes")
            out[list(idx)] = value
        return out

    def value_classes(self) -> dict[float, list[int]]:
        """Indices grouped by distinct non-default value."""
        classes: dict[float, list[int]] = {}
        for idx, value in self.regions:
            if value == self.default:
                continue
            classes.setdefault(value, []).extend(idx)
        return {v: sorted(i) for v, i in classes.items()}

    def minimum(self) -> float:
        return min([self.default] + [v for _, v in self.regions])

    def is_zero(self) -> bool:
        return self.default == 0.0 and all(v == 0.0 for _, v in self.regions)


def node_array(values: Sequence[float] | np.ndarray, grid: Grid, what: str = "array") -> np.ndarray:
    arr = np.asarray(values, dtype=complex).ravel()
    if arr.size != grid.n_nodes:
        raise ValueError(f"{what}: expected {grid.n_nodes} node values, got {arr.size}")
    return arr


__all__ = ["Boundary", "BoundarySpec", "Grid", "PiecewiseField", "node_array"]
