"""Soaring feasibility analysis.

Maps the glide polar onto a wind field to get the excess updraft
e(x, z) = wz - s(wx) under the hover assumption (airspeed equal to the
local horizontal wind, ground speed near zero). The zero level set of e
is the zero-excess-updraft contour: the boundary of the feasible soaring
region, extracted here by marching squares. A target gradient line is an
operator-chosen oriented line from excess into deficit; the aircraft
settles where the line crosses the contour, which predict_equilibrium
locates by bracketing and bisection.

Grid cells where the polar range is exceeded (or the field is not
evaluable) are marked unknown and excluded from contouring, since the
region mapping is only defined on the polar's domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from . import airframe as af
from .errors import (
    EmptyDomain,
    InsideBody,
    NearHorizontal,
    NoIntersection,
    OutOfBounds,
    OutOfPolarRange,
    PointNotNearContour,
    PointOffTgl,
)
from .windfield import ScaleSchedule, WindField, sample

# Lines with |A| below this are rejected: a horizontal target line gives
# the pitch loop no authority over the error it is asked to regulate.
MIN_LINE_SLOPE = 1e-6

EQUILIBRIUM_TOL = 1e-6          # |e| at a converged crossing, m/s
ON_LINE_TOL = 1e-6              # point-to-line residual treated as "on", m
DEFAULT_SCAN_POINTS = 256       # bracketing resolution along the line

_FIELD_ERRORS = (OutOfPolarRange, InsideBody, OutOfBounds)


@dataclass(frozen=True)
class Tgl:
    """Target gradient line a x + b z + c = 0, normalized.

    a^2 + b^2 = 1 with a > 0, so the unit normal (a, b) points downstream
    and the direction (-b, a) always gains altitude. provenance records
    how the line was specified.
    """

    a: float
    b: float
    c: float
    provenance: str = "coefficients"

    def __post_init__(self):
        norm = math.hypot(self.a, self.b)
        if abs(norm - 1.0) > 1e-12 or self.a <= 0.0:
            raise ValueError(
                "coefficients must be normalized with a > 0; "
                "build lines via make_tgl or tgl_from_coefficients"
            )
        if self.a < MIN_LINE_SLOPE:
            raise NearHorizontal(f"line too close to horizontal (a={self.a:.3g})")


def tgl_from_coefficients(a: float, b: float, c: float,
                          provenance: str = "coefficients") -> Tgl:
    """Normalize raw line coefficients into a Tgl.

    Scales to a unit normal and flips signs so a > 0. Raises
    NearHorizontal when the line is (nearly) horizontal.
    """
    norm = math.hypot(a, b)
    if norm == 0.0 or not all(math.isfinite(v) for v in (a, b, c)):
        raise ValueError(f"degenerate line coefficients ({a}, {b}, {c})")
    a, b, c = a / norm, b / norm, c / norm
    if abs(a) < MIN_LINE_SLOPE:
        raise NearHorizontal(f"line too close to horizontal (|a|={abs(a):.3g})")
    if a < 0.0:
        a, b, c = -a, -b, -c
    return Tgl(a, b, c, provenance)


def make_tgl(origin: tuple[float, float], angle_from_vertical: float) -> Tgl:
    """Line through origin, tilted by angle_from_vertical (rad).

    Zero angle is a vertical line; positive angles lean the upward
    direction downstream. Angles near +-pi/2 raise NearHorizontal.
    """
    a = math.cos(angle_from_vertical)
    b = -math.sin(angle_from_vertical)
    c = -(a * origin[0] + b * origin[1])
    return tgl_from_coefficients(a, b, c, provenance="point_angle")


def translate_tgl(tgl: Tgl, delta: tuple[float, float]) -> Tgl:
    """Rigid translation of the line by delta = (dx, dz)."""
    c = tgl.c - (tgl.a * delta[0] + tgl.b * delta[1])
    return replace(tgl, c=c)


def rotate_tgl(tgl: Tgl, pivot: tuple[float, float], dangle: float) -> Tgl:
    """Rigid rotation of the line about pivot by dangle (rad).

    The pivot keeps its signed distance to the line. Raises
    NearHorizontal if the rotated line is unusable.
    """
    cos_d, sin_d = math.cos(dangle), math.sin(dangle)
    a = cos_d * tgl.a - sin_d * tgl.b
    b = sin_d * tgl.a + cos_d * tgl.b
    px, pz = pivot
    c = (tgl.a * px + tgl.b * pz + tgl.c) - (a * px + b * pz)
    return tgl_from_coefficients(a, b, c, provenance=tgl.provenance)


def tgl_direction(tgl: Tgl) -> tuple[float, float]:
    """Unit direction along the line with positive altitude component."""
    return (-tgl.b, tgl.a)


def tgl_x_at(tgl: Tgl, z: float) -> float:
    """x coordinate of the line at altitude z."""
    return -(tgl.b * z + tgl.c) / tgl.a


@dataclass(frozen=True)
class Domain:
    """Axis-aligned analysis box."""

    x_min: float
    x_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.z_min, self.z_max)
        if not all(math.isfinite(v) for v in vals):
            raise EmptyDomain(f"domain bounds must be finite, got {vals}")
        if not (self.x_min < self.x_max and self.z_min < self.z_max):
            raise EmptyDomain(
                f"empty domain [{self.x_min}, {self.x_max}] x "
                f"[{self.z_min}, {self.z_max}]"
            )

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x_max - self.x_min, self.z_max - self.z_min)


@dataclass(frozen=True)
class ZeucContour:
    """Zero-excess-updraft contour as ordered polylines.

    polylines holds (x, z) vertex chains; cell is the grid resolution the
    extraction actually used; unknown_cells counts cells excluded because
    the excess updraft was not evaluable at one of their corners.
    """

    polylines: tuple[tuple[tuple[float, float], ...], ...]
    cell: float
    unknown_cells: int = 0


@dataclass(frozen=True)
class Equilibrium:
    """Predicted soaring equilibrium on a target line.

    crossings reports how many line/contour crossings the scan found;
    the returned position is the lowest stable one.
    """

    position: tuple[float, float]
    local_wind: tuple[float, float]
    stability: str
    tgl_zeuc_angle: float
    crossings: int


def excess_updraft(
    field: WindField,
    schedule: Optional[ScaleSchedule],
    polar: af.GlidePolar,
    x: float,
    z: float,
    t: float,
) -> float:
    """Local updraft minus the sink rate implied by the horizontal wind.

    Hover assumption: airspeed equals the local horizontal wind. Raises
    OutOfPolarRange (carrying wx) instead of clamping, and propagates
    field errors.
    """
    w = sample(field, schedule, x, z, t)
    return w.wz - af.sink_rate(polar, w.wx)


# marching squares ------------------------------------------------------
#
# Corner bits (BL, BR, TR, TL) index a segment table whose entries name
# cell edges; crossing points are interpolated once per grid edge so
# neighboring cells share vertices exactly. The two saddle cases are
# disambiguated with the bilinear center value (mean of the corners).

_B, _R, _T, _L = "b", "r", "t", "l"
_SEGMENT_TABLE: dict[int, list[tuple[str, str]]] = {
    0: [], 15: [],
    1: [(_L, _B)], 14: [(_L, _B)],
    2: [(_B, _R)], 13: [(_B, _R)],
    3: [(_L, _R)], 12: [(_L, _R)],
    4: [(_T, _R)], 11: [(_T, _R)],
    6: [(_B, _T)], 9: [(_B, _T)],
    7: [(_L, _T)], 8: [(_L, _T)],
}
_SADDLE_CONNECTED = {5: [(_L, _T), (_B, _R)], 10: [(_L, _B), (_T, _R)]}
_SADDLE_SPLIT = {5: [(_L, _B), (_T, _R)], 10: [(_L, _T), (_B, _R)]}


def _axis_nodes(lo: float, hi: float, cell: float) -> list[float]:
    n = max(1, math.ceil((hi - lo) / cell - 1e-12))
    step = (hi - lo) / n
    return [lo + i * step for i in range(n)] + [hi]


def extract_zeuc(
    field: WindField,
    schedule: Optional[ScaleSchedule],
    polar: af.GlidePolar,
    domain: Domain,
    cell: float,
    t: float,
) -> ZeucContour:
    """Marching-squares contour of zero excess updraft over the domain.

    Linear interpolation along cell edges; deterministic vertex order
    (cells scanned row-major, chains walked from sorted endpoints). An
    absent sign change yields an empty contour, not an error.
    """
    if not (cell > 0.0 and math.isfinite(cell)):
        raise ValueError(f"cell must be finite and > 0, got {cell}")
    xs = _axis_nodes(domain.x_min, domain.x_max, cell)
    zs = _axis_nodes(domain.z_min, domain.z_max, cell)
    nx, nz = len(xs), len(zs)

    values: list[list[Optional[float]]] = [[None] * nz for _ in range(nx)]
    for i in range(nx):
        for j in range(nz):
            try:
                values[i][j] = excess_updraft(field, schedule, polar, xs[i], zs[j], t)
            except _FIELD_ERRORS:
                values[i][j] = None

    crossing_cache: dict[tuple, tuple[float, float]] = {}

    def edge_vertex(kind, i, j):
        """Interpolated zero on grid edge; kind 'h' runs +x, 'v' runs +z."""
        key = (kind, i, j)
        cached = crossing_cache.get(key)
        if cached is not None:
            return cached
        if kind == "h":
            p0, p1 = (xs[i], zs[j]), (xs[i + 1], zs[j])
            e0, e1 = values[i][j], values[i + 1][j]
        else:
            p0, p1 = (xs[i], zs[j]), (xs[i], zs[j + 1])
            e0, e1 = values[i][j], values[i][j + 1]
        frac = min(max(e0 / (e0 - e1), 0.0), 1.0)
        pt = (p0[0] + (p1[0] - p0[0]) * frac, p0[1] + (p1[1] - p0[1]) * frac)
        crossing_cache[key] = pt
        return pt

    segments: list[tuple[tuple, tuple]] = []
    unknown_cells = 0
    for j in range(nz - 1):
        for i in range(nx - 1):
            corners = (
                values[i][j], values[i + 1][j],
                values[i + 1][j + 1], values[i][j + 1],
            )
            if any(v is None for v in corners):
                unknown_cells += 1
                continue
            index = sum(1 << k for k, v in enumerate(corners) if v > 0.0)
            if index in _SADDLE_CONNECTED:
                center = 0.25 * sum(corners)
                pairs = (_SADDLE_CONNECTED if center > 0.0 else _SADDLE_SPLIT)[index]
            else:
                pairs = _SEGMENT_TABLE[index]
            edge_keys = {
                _B: ("h", i, j), _T: ("h", i, j + 1),
                _L: ("v", i, j), _R: ("v", i + 1, j),
            }
            for e_a, e_b in pairs:
                segments.append((edge_keys[e_a], edge_keys[e_b]))

    polylines = _assemble_polylines(segments, edge_vertex)
    step_x = xs[1] - xs[0] if nx > 1 else domain.x_max - domain.x_min
    step_z = zs[1] - zs[0] if nz > 1 else domain.z_max - domain.z_min
    return ZeucContour(
        polylines=polylines,
        cell=max(step_x, step_z),
        unknown_cells=unknown_cells,
    )


def _assemble_polylines(segments, edge_vertex):
    """Chain shared-edge segments into ordered polylines.

    Open chains are walked first from their endpoints, then closed loops;
    all choices are made in sorted edge-key order for determinism.
    """
    adjacency: dict[tuple, list[tuple[tuple, int]]] = {}
    for seg_id, (ka, kb) in enumerate(segments):
        adjacency.setdefault(ka, []).append((kb, seg_id))
        adjacency.setdefault(kb, []).append((ka, seg_id))
    for nbrs in adjacency.values():
        nbrs.sort()

    visited: set[int] = set()

    def walk(start):
        chain = [start]
        current = start
        while True:
            step = next(
                ((nbr, sid) for nbr, sid in adjacency[current] if sid not in visited),
                None,
            )
            if step is None:
                return chain
            nbr, sid = step
            visited.add(sid)
            chain.append(nbr)
            current = nbr

    polylines = []
    endpoints = sorted(k for k, nbrs in adjacency.items() if len(nbrs) % 2 == 1)
    for key in endpoints:
        if all(sid in visited for _, sid in adjacency[key]):
            continue
        polylines.append(walk(key))
    for key in sorted(adjacency):
        if all(sid in visited for _, sid in adjacency[key]):
            continue
        polylines.append(walk(key))

    return tuple(
        tuple(edge_vertex(*key) for key in chain) for chain in polylines
    )


def predict_equilibrium(
    tgl: Tgl,
    field: WindField,
    schedule: Optional[ScaleSchedule],
    polar: af.GlidePolar,
    z_range: tuple[float, float],
    t: float,
    scan_points: int = DEFAULT_SCAN_POINTS,
    tol: float = EQUILIBRIUM_TOL,
) -> Equilibrium:
    """Locate where the target line crosses the zero-excess contour.

    Parametrizes the line by altitude over z_range, brackets sign changes
    of the excess updraft (points where it is not evaluable become gaps),
    and bisects each bracket to |e| < 1e-6 m/s. Returns the lowest stable
    crossing and reports how many crossings were found. Raises
    NoIntersection when the line never crosses the contour; errors at the
    range ends propagate.
    """
    z_lo, z_hi = z_range
    if not z_lo < z_hi:
        raise ValueError(f"empty altitude range [{z_lo}, {z_hi}]")

    def excess_at(z):
        return excess_updraft(field, schedule, polar, tgl_x_at(tgl, z), z, t)

    # Range ends must be evaluable per the operation contract.
    excess_at(z_lo)
    excess_at(z_hi)

    span = z_hi - z_lo
    zs = [z_lo + span * k / (scan_points - 1) for k in range(scan_points)]
    samples: list[Optional[float]] = []
    for z in zs:
        try:
            samples.append(excess_at(z))
        except _FIELD_ERRORS:
            samples.append(None)

    roots: list[float] = []
    for k in range(scan_points - 1):
        e0, e1 = samples[k], samples[k + 1]
        if e0 is None or e1 is None:
            continue
        if e0 == 0.0:
            if not roots or abs(roots[-1] - zs[k]) > span / scan_points:
                roots.append(zs[k])
            continue
        if (e0 > 0.0) == (e1 > 0.0):
            continue
        lo, hi, e_lo = zs[k], zs[k + 1], e0
        root = None
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            e_mid = excess_at(mid)
            if abs(e_mid) < tol:
                root = mid
                break
            if (e_mid > 0.0) == (e_lo > 0.0):
                lo, e_lo = mid, e_mid
            else:
                hi = mid
        roots.append(root if root is not None else 0.5 * (lo + hi))

    if not roots:
        raise NoIntersection(
            "target line does not cross the zero-excess contour on "
            f"z in [{z_lo}, {z_hi}]"
        )

    step = 1e-3 * span
    classified = [
        (z, equilibrium_stability(
            tgl, field, schedule, polar, (tgl_x_at(tgl, z), z), t, step=step))
        for z in roots
    ]
    chosen = next(
        ((z, s) for z, s in classified if s == "stable"), classified[0]
    )
    z_star, stability = chosen
    x_star = tgl_x_at(tgl, z_star)
    wind = sample(field, schedule, x_star, z_star, t)
    angle = _angle_from_gradient(
        tgl, field, schedule, polar, (x_star, z_star), t, step)
    return Equilibrium(
        position=(x_star, z_star),
        local_wind=(wind.wx, wind.wz),
        stability=stability,
        tgl_zeuc_angle=angle,
        crossings=len(roots),
    )


def equilibrium_stability(
    tgl: Tgl,
    field: WindField,
    schedule: Optional[ScaleSchedule],
    polar: af.GlidePolar,
    point: tuple[float, float],
    t: float,
    step: float = 1e-3,
) -> str:
    """'stable' iff the excess updraft decreases upward along the line.

    Central difference of e along the line direction (altitude-increasing)
    with the given step. The point must lie on the line within tolerance.
    """
    x, z = point
    residual = tgl.a * x + tgl.b * z + tgl.c
    if abs(residual) > ON_LINE_TOL:
        raise PointOffTgl(
            f"point ({x}, {z}) is {residual:.3g} m off the line"
        )
    dx, dz = tgl_direction(tgl)
    e_up = excess_updraft(field, schedule, polar, x + step * dx, z + step * dz, t)
    e_dn = excess_updraft(field, schedule, polar, x - step * dx, z - step * dz, t)
    return "stable" if (e_up - e_dn) < 0.0 else "unstable"


def _angle_from_gradient(tgl, field, schedule, polar, point, t, step):
    """Acute angle (deg) between the line and the contour tangent.

    The tangent is taken perpendicular to the finite-difference gradient
    of the excess updraft; nan when the gradient is not resolvable.
    """
    x, z = point
    try:
        ex = (excess_updraft(field, schedule, polar, x + step, z, t)
              - excess_updraft(field, schedule, polar, x - step, z, t)) / (2 * step)
        ez = (excess_updraft(field, schedule, polar, x, z + step, t)
              - excess_updraft(field, schedule, polar, x, z - step, t)) / (2 * step)
    except _FIELD_ERRORS:
        return math.nan
    tangent = (-ez, ex)
    norm = math.hypot(*tangent)
    if norm == 0.0:
        return math.nan
    dx, dz = tgl_direction(tgl)
    cos_angle = abs(dx * tangent[0] + dz * tangent[1]) / norm
    return math.degrees(math.acos(min(cos_angle, 1.0)))


def scaling_sensitivity(polar: af.GlidePolar, v: float) -> float:
    """Immediate de/dlambda at a contour point under uniform wind scaling.

    On the contour the updraft equals s(v); scaling both wind components
    by lambda gives de/dlambda = s(v) - v s'(v) at lambda = 1. Positive
    means a wind increase lifts the aircraft, negative sinks it.
    """
    return af.sink_rate(polar, v) - v * af.sink_rate_slope(polar, v)


def tgl_zeuc_angle(
    tgl: Tgl, contour: ZeucContour, point: tuple[float, float]
) -> float:
    """Acute angle (deg) between the line and the contour near point.

    Uses the contour tangent from the vertices adjacent to the one
    nearest the point; 90 means perpendicular. The point must lie within
    one extraction cell of the contour.
    """
    best = None
    for pi, poly in enumerate(contour.polylines):
        for vi, (vx, vz) in enumerate(poly):
            d = math.hypot(vx - point[0], vz - point[1])
            if best is None or d < best[0]:
                best = (d, pi, vi)
    if best is None or best[0] > contour.cell:
        raise PointNotNearContour(
            f"point {point} is not within one cell ({contour.cell}) of the contour"
        )
    _, pi, vi = best
    poly = contour.polylines[pi]
    if len(poly) < 2:
        raise PointNotNearContour("nearest polyline has a single vertex")
    lo = max(vi - 1, 0)
    hi = min(vi + 1, len(poly) - 1)
    tangent = (poly[hi][0] - poly[lo][0], poly[hi][1] - poly[lo][1])
    norm = math.hypot(*tangent)
    if norm == 0.0:
        raise PointNotNearContour("degenerate contour tangent")
    dx, dz = tgl_direction(tgl)
    cos_angle = abs(dx * tangent[0] + dz * tangent[1]) / norm
    return math.degrees(math.acos(min(cos_angle, 1.0)))


def clipped_z_range(
    tgl: Tgl,
    field: WindField,
    schedule: Optional[ScaleSchedule],
    polar: af.GlidePolar,
    z_range: tuple[float, float],
    t: float,
    probes: int = 128,
) -> tuple[float, float]:
    """Trim z_range to the evaluable stretch of the line.

    Convenience for callers with a domain box that may clip the body or
    the polar range at its ends; raises NoIntersection when no stretch of
    the line is evaluable at all.
    """
    z_lo, z_hi = z_range
    span = z_hi - z_lo
    zs = [z_lo + span * k / (probes - 1) for k in range(probes)]
    good = []
    for z in zs:
        try:
            excess_updraft(field, schedule, polar, tgl_x_at(tgl, z), z, t)
            good.append(z)
        except _FIELD_ERRORS:
            continue
    if len(good) < 2:
        raise NoIntersection("line is not evaluable anywhere on the range")
    return (good[0], good[-1])


def contour_to_json(contour: ZeucContour, t: float) -> dict:
    """JSON-ready mapping: {polylines: [[[x, z], ...]], cell, t}."""
    return {
        "polylines": [[[x, z] for x, z in poly] for poly in contour.polylines],
        "cell": contour.cell,
        "t": t,
        "unknown_cells": contour.unknown_cells,
    }


def contour_to_csv_rows(contour: ZeucContour) -> list[tuple[int, float, float]]:
    """Flat (polyline_id, x, z) rows for CSV export."""
    rows = []
    for pid, poly in enumerate(contour.polylines):
        for x, z in poly:
            rows.append((pid, x, z))
    return rows
