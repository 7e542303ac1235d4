"""Spatio-temporal risk accumulation on 2-D grids.

Every person stamps a small cross-shaped kernel (center 2, edge neighbors
1, corners 0) at their grid cell.  Three accumulators build on that:
a monotone tracking grid, a 3-layer violation grid with per-layer
coefficients, and a decaying crowd grid for ventilated scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distancing import FramePositions, ZoneLabel

# Stamp offsets (drow, dcol, weight): kernel mass is 6 for interior stamps.
_KERNEL = ((0, 0, 2.0), (-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0))


@dataclass
class RiskGrid:
    """Non-negative accumulator over width x height cells.

    cell_scale is BEV pixels per cell; stamps outside the grid are dropped
    (never clamped to the border) and counted in `dropped`.
    """

    width: int
    height: int
    cell_scale: float = 1.0
    values: np.ndarray = field(default=None)  # type: ignore[assignment]
    dropped: int = 0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.cell_scale <= 0:
            raise ValueError(f"cell_scale must be positive, got {self.cell_scale}")
        if self.values is None:
            self.values = np.zeros((self.height, self.width))

    def cell_of(self, xw: float, yw: float) -> tuple[int, int] | None:
        """(col, row) for a BEV point, or None when it falls off the grid."""
        col = math.floor(xw / self.cell_scale)
        row = math.floor(yw / self.cell_scale)
        if 0 <= col < self.width and 0 <= row < self.height:
            return col, row
        return None


def stamp_kernel(grid: RiskGrid, center: tuple[int, int]) -> RiskGrid:
    """Add the kernel at cell (col, row), clipping at the borders.

    Out-of-bounds centers are ignored and counted on grid.dropped.
    """
    col, row = center
    if not (0 <= col < grid.width and 0 <= row < grid.height):
        grid.dropped += 1
        return grid
    v = grid.values
    for dr, dc, w in _KERNEL:
        r, c = row + dr, col + dc
        if 0 <= r < grid.height and 0 <= c < grid.width:
            v[r, c] += w
    return grid


def _stamp_positions(grid: RiskGrid, pos: FramePositions, ids=None) -> None:
    for tid, p in pos.entries:
        if ids is not None and tid not in ids:
            continue
        cell = grid.cell_of(p.xw, p.yw)
        if cell is None:
            grid.dropped += 1
        else:
            stamp_kernel(grid, cell)


def accumulate_tracking(grid: RiskGrid, pos: FramePositions) -> RiskGrid:
    """Stamp every detected person for this frame onto the tracking grid."""
    _stamp_positions(grid, pos)
    return grid


@dataclass
class ViolationGrid:
    """Three stacked accumulators: red breaches, tracked presence, couples.

    The combined scalar field is alpha*R + beta*T + delta*Y; the
    coefficients weight how much each factor spreads contamination.
    """

    width: int
    height: int
    alpha: float = 1.0
    beta: float = 0.1
    delta: float = 0.5
    cell_scale: float = 1.0
    layer_r: RiskGrid = field(default=None)  # type: ignore[assignment]
    layer_t: RiskGrid = field(default=None)  # type: ignore[assignment]
    layer_y: RiskGrid = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.delta) < 0:
            raise ValueError("risk coefficients must be non-negative")
        for name in ("layer_r", "layer_t", "layer_y"):
            if getattr(self, name) is None:
                setattr(self, name, RiskGrid(self.width, self.height, self.cell_scale))

    def combined(self) -> np.ndarray:
        return (
            self.alpha * self.layer_r.values
            + self.beta * self.layer_t.values
            + self.delta * self.layer_y.values
        )


def accumulate_violations(
    vg: ViolationGrid, labels: dict[int, ZoneLabel], pos: FramePositions
) -> ViolationGrid:
    """Stamp red people on layer R, everyone on layer T, yellow on layer Y."""
    red = {tid for tid, z in labels.items() if z is ZoneLabel.HIGH_RISK}
    yellow = {tid for tid, z in labels.items() if z is ZoneLabel.POTENTIALLY_RISKY}
    _stamp_positions(vg.layer_r, pos, red)
    _stamp_positions(vg.layer_t, pos)
    _stamp_positions(vg.layer_y, pos, yellow)
    return vg


@dataclass
class CrowdGrid:
    """Decaying occupancy grid for scenes with ventilation.

    Cells decay by decay_gamma each frame before new stamps land, so a
    steadily occupied cell converges to stamp_weight / (1 - gamma).
    """

    width: int
    height: int
    decay_gamma: float = 0.99
    cell_scale: float = 1.0
    grid: RiskGrid = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not (0.0 < self.decay_gamma <= 1.0):
            raise ValueError(f"decay_gamma must be in (0, 1], got {self.decay_gamma}")
        if self.grid is None:
            self.grid = RiskGrid(self.width, self.height, self.cell_scale)

    @property
    def values(self) -> np.ndarray:
        return self.grid.values


def crowd_step(cg: CrowdGrid, pos: FramePositions) -> CrowdGrid:
    """Decay every cell, then stamp the currently occupied cells."""
    cg.grid.values *= cg.decay_gamma
    _stamp_positions(cg.grid, pos)
    return cg


@dataclass
class LongTermCrowd:
    """Exponential moving average over single-frame crowd maps."""

    width: int
    height: int
    smoothing: float = 0.999
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not (0.0 <= self.smoothing < 1.0):
            raise ValueError(f"smoothing must be in [0, 1), got {self.smoothing}")
        if self.values is None:
            self.values = np.zeros((self.height, self.width))
        self._scratch = np.empty_like(self.values)

    def update(self, crowd_values: np.ndarray) -> None:
        # in place: this runs once per frame on the full grid
        np.multiply(crowd_values, 1.0 - self.smoothing, out=self._scratch)
        self.values *= self.smoothing
        self.values += self._scratch


def normalize(X: np.ndarray, l: float, u: float) -> np.ndarray:
    """Affine rescale of X into [l, u]; a constant matrix maps to all l."""
    if not u > l:
        raise ValueError(f"need u > l, got l={l}, u={u}")
    X = np.asarray(X, dtype=float)
    lo = X.min()
    hi = X.max()
    if hi == lo:
        return np.full_like(X, float(l))
    # ratio first: exactly 0 at the min and 1 at the max, so the output
    # range hits [l, u] endpoint-exact
    ratio = (X - lo) / (hi - lo)
    return l + (u - l) * ratio


def render_heatmap(G: np.ndarray, S_combined: np.ndarray) -> np.ndarray:
    """Hue raster of combined risk: 120 (blue) at zero risk, 0 (red) at peak.

    The risk field is max(G, 2*S) normalized into [0, 120]; hue is its
    complement so hot cells render red.
    """
    G = np.asarray(G, dtype=float)
    S_combined = np.asarray(S_combined, dtype=float)
    if G.shape != S_combined.shape:
        raise ValueError(f"grid shapes differ: {G.shape} vs {S_combined.shape}")
    risk = normalize(np.maximum(G, 2.0 * S_combined), 0.0, 120.0)
    return 120.0 - risk
