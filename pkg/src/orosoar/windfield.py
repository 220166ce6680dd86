"""Orographic wind field models.

Two concrete field types: the analytic potential-flow solution around a
circular cylinder (uniform stream plus doublet, the idealized hill), and
a bilinearly interpolated rectangular grid loaded from CSV for externally
computed fields. Either can be wrapped in a time-varying uniform scale to
emulate free-stream speed changes; uniform scaling preserves the field
shape, so the vertical component stays proportional to the horizontal.

Coordinate frame, shared by the whole package: x positive downstream
(free-stream direction), z positive up, lengths in meters, speeds in m/s.
All field types are immutable after construction and evaluation is pure.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple, Optional, Union

import numpy as np

from .errors import (
    IncompleteLattice,
    InsideBody,
    MalformedRow,
    NonMonotoneCoordinates,
    OutOfBounds,
)

# Coordinates closer than this are treated as the same lattice line,
# absorbing formatting jitter in exported CFD data.
COORD_MERGE_TOL = 1e-9

GRID_CSV_HEADER = ("x", "z", "wx", "wz")


class WindVector(NamedTuple):
    """Wind sample in m/s: wx positive downstream, wz positive up."""

    wx: float
    wz: float


@dataclass(frozen=True)
class CylinderField:
    """Potential flow of a uniform stream past a circular cylinder.

    freestream is the undisturbed speed U (m/s), radius the cylinder
    radius R (m). The flow is evaluated from the standard doublet
    superposition, in polar coordinates centered on the cylinder:

        V_r     = U (1 - R^2/r^2) cos(theta)
        V_theta = -U (1 + R^2/r^2) sin(theta)

    Points strictly inside the body are rejected; the boundary r = R is
    the classical tangency case (stagnation points, 2U speed-up on top)
    and evaluates normally.
    """

    freestream: float
    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.freestream) and self.freestream > 0.0):
            raise ValueError(f"freestream must be finite and > 0, got {self.freestream}")
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError(f"radius must be finite and > 0, got {self.radius}")
        cx, cz = self.center
        if not (math.isfinite(cx) and math.isfinite(cz)):
            raise ValueError(f"center must be finite, got {self.center}")


def sample_cylinder(field: CylinderField, x: float, z: float) -> WindVector:
    """Wind vector of the cylinder flow at (x, z).

    Raises InsideBody for points strictly inside the cylinder. Far from
    the body the result approaches (U, 0).
    """
    dx = x - field.center[0]
    dz = z - field.center[1]
    r2 = dx * dx + dz * dz
    radius2 = field.radius * field.radius
    if r2 < radius2:
        raise InsideBody(
            f"point ({x}, {z}) lies inside the cylinder "
            f"(r={math.sqrt(r2):.6g} < R={field.radius:.6g})"
        )
    u = field.freestream
    ratio = radius2 / r2
    theta = math.atan2(dz, dx)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    v_r = u * (1.0 - ratio) * cos_t
    v_t = -u * (1.0 + ratio) * sin_t
    wx = v_r * cos_t - v_t * sin_t
    wz = v_r * sin_t + v_t * cos_t
    return WindVector(wx, wz)


@dataclass(frozen=True, eq=False)
class GridField:
    """Rectangular wind field sampled on a tensor-product grid.

    x_coords and z_coords are strictly increasing sample positions;
    wx_samples and wz_samples have shape (len(x_coords), len(z_coords)).
    Queries are bilinear; extrapolation is a hard error so simulator
    escapes from the modeled domain cannot pass silently.
    """

    x_coords: np.ndarray
    z_coords: np.ndarray
    wx_samples: np.ndarray
    wz_samples: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.x_coords, dtype=float)
        zs = np.asarray(self.z_coords, dtype=float)
        wx = np.asarray(self.wx_samples, dtype=float)
        wz = np.asarray(self.wz_samples, dtype=float)
        if xs.ndim != 1 or zs.ndim != 1 or xs.size < 2 or zs.size < 2:
            raise ValueError("grid needs at least 2 coordinates per axis")
        for name, arr in (("x_coords", xs), ("z_coords", zs)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            if not np.all(np.diff(arr) > 0):
                raise NonMonotoneCoordinates(f"{name} must be strictly increasing")
        expected = (xs.size, zs.size)
        if wx.shape != expected or wz.shape != expected:
            raise ValueError(
                f"sample arrays must have shape {expected}, "
                f"got {wx.shape} and {wz.shape}"
            )
        if not (np.all(np.isfinite(wx)) and np.all(np.isfinite(wz))):
            raise ValueError("wind samples must be finite")
        for name, arr in (
            ("x_coords", xs), ("z_coords", zs),
            ("wx_samples", wx), ("wz_samples", wz),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def sample_grid(field: GridField, x: float, z: float) -> WindVector:
    """Bilinear interpolation of the grid field at (x, z).

    Raises OutOfBounds (naming the offending coordinate) outside the
    bounding box; the box edges themselves are valid.
    """
    xs = field.x_coords
    zs = field.z_coords
    if not (xs[0] <= x <= xs[-1]):
        raise OutOfBounds(
            f"x={x} outside grid range [{xs[0]}, {xs[-1]}]", axis="x", value=x
        )
    if not (zs[0] <= z <= zs[-1]):
        raise OutOfBounds(
            f"z={z} outside grid range [{zs[0]}, {zs[-1]}]", axis="z", value=z
        )
    i = min(max(int(np.searchsorted(xs, x, side="right")) - 1, 0), xs.size - 2)
    j = min(max(int(np.searchsorted(zs, z, side="right")) - 1, 0), zs.size - 2)
    tx = (x - xs[i]) / (xs[i + 1] - xs[i])
    tz = (z - zs[j]) / (zs[j + 1] - zs[j])

    def lerp2(a):
        bottom = a[i, j] * (1.0 - tx) + a[i + 1, j] * tx
        top = a[i, j + 1] * (1.0 - tx) + a[i + 1, j + 1] * tx
        return bottom * (1.0 - tz) + top * tz

    return WindVector(float(lerp2(field.wx_samples)), float(lerp2(field.wz_samples)))


@dataclass(frozen=True)
class ScaleSchedule:
    """Piecewise-linear wind scale factor over time, clamped at the ends.

    breakpoints is a sequence of (t, lambda) pairs with strictly
    increasing t and lambda > 0.
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(t), float(lam)) for t, lam in self.breakpoints)
        if not pts:
            raise ValueError("schedule needs at least one breakpoint")
        times = [t for t, _ in pts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        if any(not (math.isfinite(lam) and lam > 0.0) for _, lam in pts):
            raise ValueError("scale factors must be finite and > 0")
        object.__setattr__(self, "breakpoints", pts)

    def value(self, t: float) -> float:
        pts = self.breakpoints
        if t <= pts[0][0]:
            return pts[0][1]
        if t >= pts[-1][0]:
            return pts[-1][1]
        times = [p[0] for p in pts]
        i = bisect_right(times, t) - 1
        t0, l0 = pts[i]
        t1, l1 = pts[i + 1]
        frac = (t - t0) / (t1 - t0)
        return l0 + (l1 - l0) * frac


@dataclass(frozen=True)
class ScaledField:
    """A wind field with a time-varying uniform scale applied.

    Wrapping a field rather than baking the scale into it keeps scenarios
    composable: any field (including another ScaledField) can be wrapped.
    """

    base: "WindField"
    schedule: ScaleSchedule


WindField = Union[CylinderField, GridField, ScaledField]


def sample(
    field: WindField,
    schedule: Optional[ScaleSchedule],
    x: float,
    z: float,
    t: float,
) -> WindVector:
    """Sample any wind field at (x, z, t), applying the scale schedule.

    Both components are multiplied by lambda(t), so scaling preserves the
    field shape exactly. schedule may be None for an unscaled sample.
    Underlying field errors (InsideBody, OutOfBounds) propagate.
    """
    if isinstance(field, ScaledField):
        base = sample(field.base, field.schedule, x, z, t)
    elif isinstance(field, CylinderField):
        base = sample_cylinder(field, x, z)
    elif isinstance(field, GridField):
        base = sample_grid(field, x, z)
    else:
        raise TypeError(f"not a wind field: {type(field).__name__}")
    if schedule is None:
        return base
    lam = schedule.value(t)
    return WindVector(lam * base.wx, lam * base.wz)


def _merge_coords(values: Iterable[float]) -> list[float]:
    """Sorted cluster representatives, merging values within tolerance."""
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > COORD_MERGE_TOL:
            out.append(v)
    return out


def _coord_index(reps: list[float], v: float) -> int:
    i = bisect_right(reps, v) - 1
    if i >= 0 and abs(v - reps[i]) <= COORD_MERGE_TOL:
        return i
    if i + 1 < len(reps) and abs(v - reps[i + 1]) <= COORD_MERGE_TOL:
        return i + 1
    raise KeyError(v)


def load_grid(source: Union[IO[str], Iterable[str]]) -> GridField:
    """Build a GridField from CSV with header ``x,z,wx,wz``.

    Rows may come in any order but must form a complete rectangular
    lattice. Coordinates matching within 1e-9 m are merged. Raises
    MalformedRow (with the line number), IncompleteLattice, or
    NonMonotoneCoordinates.
    """
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("empty CSV stream", line=1) from None
    if tuple(h.strip().lower() for h in header) != GRID_CSV_HEADER:
        raise MalformedRow(
            f"expected header {','.join(GRID_CSV_HEADER)!r}, got {header!r}", line=1
        )

    points: list[tuple[float, float, float, float, int]] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise MalformedRow(f"expected 4 fields, got {len(row)}", line=line_no)
        try:
            x, z, wx, wz = (float(cell) for cell in row)
        except ValueError:
            raise MalformedRow(f"non-numeric cell in {row!r}", line=line_no) from None
        if not all(math.isfinite(v) for v in (x, z, wx, wz)):
            raise MalformedRow(f"non-finite value in {row!r}", line=line_no)
        points.append((x, z, wx, wz, line_no))

    if not points:
        raise MalformedRow("CSV contains no data rows", line=2)

    xs = _merge_coords(p[0] for p in points)
    zs = _merge_coords(p[1] for p in points)
    wx_arr = np.full((len(xs), len(zs)), np.nan)
    wz_arr = np.full((len(xs), len(zs)), np.nan)
    for x, z, wx, wz, line_no in points:
        i = _coord_index(xs, x)
        j = _coord_index(zs, z)
        if not math.isnan(wx_arr[i, j]):
            raise MalformedRow(
                f"duplicate lattice point ({xs[i]}, {zs[j]})", line=line_no
            )
        wx_arr[i, j] = wx
        wz_arr[i, j] = wz

    missing = np.argwhere(np.isnan(wx_arr))
    if missing.size:
        i, j = missing[0]
        raise IncompleteLattice(
            f"missing lattice point (x={xs[i]}, z={zs[j]}); "
            f"{len(missing)} of {wx_arr.size} points absent"
        )
    return GridField(np.array(xs), np.array(zs), wx_arr, wz_arr)
