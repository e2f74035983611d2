"""Morphometric features of a digitized nucleus boundary.

A boundary is a closed chain of 2-D points (last point repeats the first).
From it, and optionally from a pixel grid carrying gray-scale intensities,
the ten standard nuclear features are computed: radius, texture, perimeter,
area, compactness, smoothness, concavity, concave points, symmetry, and
fractal dimension.

Conventions chosen here (all parameterized):

* Area has a pixel mode (interior pixels plus half the boundary pixels) and an
  analytic mode (shoelace area plus half the perimeter, its continuous
  analogue at unit pixel pitch).
* Concavity slides a fixed-span chord around the boundary; the pocket where
  the arc dips inside the shape is clipped out, pockets are unioned over all
  windows, and the total pocket area is normalized by the analytic area.
* Concave points are boundary points lying strictly on the interior side of
  some sliding chord, counted as a fraction of the distinct points.
* Symmetry finds the longest center-through chord over boundary-point
  directions, then compares perpendicular intercept lengths at evenly spaced
  stations along it.
* Fractal dimension is the magnitude of the log-log slope of divider-walk
  perimeter versus ruler size (the coastline convention: smooth curves give
  ~0, a Koch edge gives log4/log3 - 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString, Point, Polygon
from shapely.ops import unary_union
from shapely.validation import make_valid

from .errors import InvalidBoundaryError, InvalidInputError


@dataclass(frozen=True)
class Boundary:
    """Closed, non-self-intersecting boundary chain; points[-1] == points[0]."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidBoundaryError(f"expected (N, 2) points, got shape {pts.shape}")
        if len(pts) < 4:
            raise InvalidBoundaryError(f"need at least 4 points (closed triangle), got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise InvalidBoundaryError("boundary contains non-finite coordinates")
        if not np.array_equal(pts[0], pts[-1]):
            raise InvalidBoundaryError("boundary is open: first and last points differ")
        distinct = pts[:-1]
        if len(np.unique(distinct, axis=0)) != len(distinct):
            raise InvalidBoundaryError("boundary repeats a point")
        if not Polygon(distinct).is_valid:
            raise InvalidBoundaryError("boundary is self-intersecting or degenerate")

    @classmethod
    def from_points(cls, points, close: bool = True) -> "Boundary":
        pts = np.asarray(points, dtype=float)
        if close and not np.array_equal(pts[0], pts[-1]):
            pts = np.vstack([pts, pts[:1]])
        return cls(pts)

    @property
    def distinct(self) -> np.ndarray:
        return self.points[:-1]

    @property
    def n_distinct(self) -> int:
        return len(self.points) - 1

    def signed_area(self) -> float:
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    def oriented(self) -> np.ndarray:
        """Distinct points in counter-clockwise traversal order."""
        return self.distinct if self.signed_area() >= 0 else self.distinct[::-1]

    def canonical_chain(self) -> np.ndarray:
        """CCW distinct points rolled to start at the lexicographically smallest
        point, so orientation- and start-sensitive walks see one fixed chain."""
        pts = self.oriented()
        start = np.lexsort((pts[:, 1], pts[:, 0]))[0]
        return np.roll(pts, -start, axis=0)

    def to_dict(self) -> dict:
        return {"points": self.points.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Boundary":
        return cls.from_points(doc["points"])

    @classmethod
    def load(cls, path) -> "Boundary":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class PixelGrid:
    """Gray-scale intensities with interior/boundary membership masks."""

    intensities: np.ndarray | None
    interior_mask: np.ndarray
    boundary_mask: np.ndarray

    @classmethod
    def from_boundary(cls, boundary: Boundary, intensities=None, origin=None) -> "PixelGrid":
        """Rasterize onto the unit-pitch integer lattice over the bounding box."""
        from skimage import draw

        pts = boundary.distinct
        if origin is None:
            origin = (math.floor(pts[:, 0].min()) - 2, math.floor(pts[:, 1].min()) - 2)
        x0, y0 = origin
        width = math.ceil(pts[:, 0].max()) - x0 + 3
        height = math.ceil(pts[:, 1].max()) - y0 + 3
        if intensities is not None:
            intensities = np.asarray(intensities, dtype=float)
            height, width = intensities.shape
        rows = pts[:, 1] - y0
        cols = pts[:, 0] - x0
        filled = np.zeros((height, width), dtype=bool)
        rr, cc = draw.polygon(rows, cols, shape=(height, width))
        filled[rr, cc] = True
        edge = np.zeros((height, width), dtype=bool)
        rr, cc = draw.polygon_perimeter(rows, cols, shape=(height, width))
        edge[rr, cc] = True
        return cls(intensities, interior_mask=filled & ~edge, boundary_mask=edge)


@dataclass(frozen=True)
class FeatureParams:
    chord_span: int | None = None  # default max(2, (N-1)//16)
    symmetry_intervals: int = 16
    ruler_sizes: tuple | None = None  # default: geometric ladder from the diameter


@dataclass(frozen=True)
class FeatureSet:
    radius: float
    texture: float | None
    perimeter: float
    area: float
    compactness: float
    smoothness: float
    concavity: float
    concave_points: float
    symmetry: float
    fractal_dimension: float

    def as_dict(self) -> dict:
        return {
            "radius": self.radius,
            "texture": self.texture,
            "perimeter": self.perimeter,
            "area": self.area,
            "compactness": self.compactness,
            "smoothness": self.smoothness,
            "concavity": self.concavity,
            "concave_points": self.concave_points,
            "symmetry": self.symmetry,
            "fractal_dimension": self.fractal_dimension,
        }


# -- size and shape basics ----------------------------------------------------


def center(boundary: Boundary) -> np.ndarray:
    return boundary.distinct.mean(axis=0)


def radius(boundary: Boundary) -> float:
    c = center(boundary)
    return float(np.linalg.norm(boundary.distinct - c, axis=1).mean())


def perimeter(boundary: Boundary) -> float:
    return float(np.linalg.norm(np.diff(boundary.points, axis=0), axis=1).sum())


def area(boundary: Boundary, grid: PixelGrid | None = None) -> float:
    """Pixel mode: interior pixels + half the boundary pixels. Analytic mode:
    shoelace area + perimeter/2, the continuous analogue at unit pitch."""
    if grid is not None:
        return float(grid.interior_mask.sum() + 0.5 * grid.boundary_mask.sum())
    enclosed = abs(boundary.signed_area())
    if enclosed == 0.0:
        raise InvalidBoundaryError("boundary encloses no area")
    return enclosed + perimeter(boundary) / 2.0


def texture(grid: PixelGrid) -> float:
    """Population variance of the gray-scale intensities inside the boundary."""
    if grid.intensities is None:
        raise InvalidInputError("texture needs a grid with intensities")
    inside = grid.intensities[grid.interior_mask]
    if inside.size == 0:
        raise InvalidInputError("texture needs a non-empty interior mask")
    return float(np.var(inside))


def compactness(perim: float, enclosed: float) -> float:
    if enclosed <= 0:
        raise InvalidInputError(f"area must be positive, got {enclosed}")
    return perim * perim / enclosed


def smoothness(boundary: Boundary) -> float:
    """Mean absolute radial deviation from the next neighbor, over the perimeter."""
    c = center(boundary)
    r = np.linalg.norm(boundary.distinct - c, axis=1)
    return float(np.abs(r - (r + np.roll(r, -1)) / 2.0).sum() / perimeter(boundary))


# -- concavity ----------------------------------------------------------------


def default_chord_span(boundary: Boundary) -> int:
    return max(2, boundary.n_distinct // 16)


def _pocket_union(boundary: Boundary, chord_span: int):
    """Union of all regions where a boundary arc dips inside its sliding chord."""
    pts = boundary.oriented()
    m = len(pts)
    main = Polygon(pts)
    tol = 1e-12 * main.area
    pockets = []
    for i in range(m):
        arc = pts[[(i + j) % m for j in range(chord_span + 1)]]
        loop = Polygon(arc)  # implicitly closed by the chord
        if not loop.is_valid:
            loop = make_valid(loop)
        pocket = loop.difference(main)
        if pocket.area > tol:
            pockets.append(pocket)
    return unary_union(pockets) if pockets else None


def concavity_area(boundary: Boundary, chord_span: int | None = None) -> float:
    """Total area of the chord-bounded indentations (un-normalized)."""
    if chord_span is None:
        chord_span = default_chord_span(boundary)
    if chord_span < 2:
        raise InvalidInputError(f"chord span must be >= 2, got {chord_span}")
    pockets = _pocket_union(boundary, chord_span)
    return float(pockets.area) if pockets is not None else 0.0


def concavity(boundary: Boundary, chord_span: int | None = None) -> float:
    """Pocket area normalized by the analytic area."""
    return concavity_area(boundary, chord_span) / area(boundary)


def concave_point_flags(boundary: Boundary, chord_span: int | None = None) -> np.ndarray:
    """Which distinct points lie strictly on the interior side of some chord."""
    if chord_span is None:
        chord_span = default_chord_span(boundary)
    if chord_span < 2:
        raise InvalidInputError(f"chord span must be >= 2, got {chord_span}")
    pts = boundary.oriented()
    m = len(pts)
    flags = np.zeros(m, dtype=bool)
    for i in range(m):
        a = pts[i]
        b = pts[(i + chord_span) % m]
        chord = b - a
        for j in range(1, chord_span):
            idx = (i + j) % m
            v = pts[idx] - a
            cross = chord[0] * v[1] - chord[1] * v[0]
            # interior side of the chord is the left side for a CCW boundary
            if cross > 1e-12 * (np.linalg.norm(chord) * np.linalg.norm(v) + 1e-300):
                flags[idx] = True
    return flags


def concave_points(boundary: Boundary, chord_span: int | None = None) -> float:
    """Fraction of distinct boundary points inside concave regions."""
    flags = concave_point_flags(boundary, chord_span)
    return float(flags.sum() / boundary.n_distinct)


# -- symmetry -----------------------------------------------------------------


def _chord_through(poly: Polygon, anchor: np.ndarray, direction: np.ndarray, reach: float):
    """The intersection segment of the line through anchor that contains anchor."""
    line = LineString([anchor - reach * direction, anchor + reach * direction])
    inter = poly.intersection(line)
    if inter.is_empty:
        return None
    parts = getattr(inter, "geoms", [inter])
    probe = Point(anchor)
    for part in parts:
        if part.geom_type == "LineString" and part.distance(probe) < 1e-9 * reach:
            return np.asarray(part.coords)
    segments = [p for p in parts if p.geom_type == "LineString"]
    if not segments:
        return None
    longest = max(segments, key=lambda p: p.length)
    return np.asarray(longest.coords)


def major_axis(boundary: Boundary):
    """Endpoints of the longest center-through chord over boundary-point directions."""
    pts = boundary.distinct
    c = center(boundary)
    poly = Polygon(boundary.oriented())
    reach = 4.0 * float(np.linalg.norm(pts - c, axis=1).max()) + 1e-9
    best, best_len = None, -1.0
    for p in pts:
        d = p - c
        norm = np.linalg.norm(d)
        if norm < 1e-12 * reach:
            continue
        coords = _chord_through(poly, c, d / norm, reach)
        if coords is None:
            continue
        length = float(np.linalg.norm(coords[-1] - coords[0]))
        if length > best_len:
            best_len = length
            best = (coords[0], coords[-1])
    if best is None:
        raise InvalidInputError("no center-through chord found")
    return best


def _line_boundary_offsets(poly: Polygon, anchor, direction, reach):
    """Signed offsets along direction of boundary crossings of the line at anchor."""
    line = LineString([anchor - reach * direction, anchor + reach * direction])
    inter = poly.exterior.intersection(line)
    if inter.is_empty:
        return np.array([])
    pieces = getattr(inter, "geoms", [inter])
    offsets = []
    for piece in pieces:
        for xy in np.atleast_2d(np.asarray(piece.coords)):
            offsets.append(float(np.dot(xy - anchor, direction)))
    return np.array(offsets)


def symmetry(boundary: Boundary, n_intervals: int = 16) -> float:
    """Relative intercept imbalance across the major axis at regular stations."""
    if n_intervals < 2:
        raise InvalidInputError(f"need at least 2 stations, got {n_intervals}")
    p0, p1 = major_axis(boundary)
    axis = p1 - p0
    axis_len = np.linalg.norm(axis)
    u = axis / axis_len
    v = np.array([-u[1], u[0]])
    poly = Polygon(boundary.oriented())
    reach = 4.0 * axis_len
    num = den = 0.0
    used = 0
    for k in range(n_intervals):
        s = p0 + ((k + 0.5) / n_intervals) * axis
        offsets = _line_boundary_offsets(poly, s, v, reach)
        above = offsets[offsets > 0]
        below = -offsets[offsets < 0]
        if len(above) == 0 or len(below) == 0:
            continue
        l_a, l_b = float(above.max()), float(below.max())
        num += abs(l_a - l_b)
        den += l_a + l_b
        used += 1
    if used == 0 or den == 0.0:
        raise InvalidInputError("no usable symmetry stations")
    return num / den


# -- fractal dimension ----------------------------------------------------------


def _first_crossing(ring, start_index, start_param, pos, ruler):
    """Earliest point along the chain at exact distance `ruler` from pos."""
    r2 = ruler * ruler
    for j in range(start_index, len(ring) - 1):
        a, b = ring[j], ring[j + 1]
        d = b - a
        dd = float(d @ d)
        if dd == 0.0:
            continue
        m = a - pos
        lo = start_param if j == start_index else 0.0
        # |m + s d|^2 = r^2; treat near-tangent discriminants as tangent so the
        # walk does not skip a crossing that sits exactly on a vertex
        bq = float(m @ d)
        cq = float(m @ m) - r2
        disc = bq * bq - dd * cq
        scale = bq * bq + abs(dd * cq) + 1e-300
        if disc < -1e-12 * scale:
            continue
        sq = math.sqrt(max(disc, 0.0))
        for s in ((-bq - sq) / dd, (-bq + sq) / dd):
            if lo < s <= 1.0 + 1e-9:
                s = min(s, 1.0)
                return j, s, a + s * d
    return None


def divider_length(boundary: Boundary, ruler: float) -> float | None:
    """Perimeter measured by walking the boundary with a fixed-length divider.

    Returns None when the ruler never reaches another boundary point (too large).
    """
    if ruler <= 0:
        raise InvalidInputError(f"ruler must be positive, got {ruler}")
    pts = boundary.canonical_chain()
    ring = np.vstack([pts, pts, pts[:1]])  # two laps so the walk can wrap once
    seg_lens = np.linalg.norm(np.diff(ring, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_lens)])
    total = perimeter(boundary)
    start = pts[0]
    pos, j, s = start, 0, 0.0
    count = 0
    while True:
        hit = _first_crossing(ring, j, s, pos, ruler)
        if hit is None:
            return None if count == 0 else count * ruler + float(np.linalg.norm(pos - start))
        j, s, new_pos = hit
        arc = cum[j] + s * seg_lens[j]
        if arc >= total:
            return count * ruler + float(np.linalg.norm(pos - start))
        pos = new_pos
        count += 1


def default_rulers(boundary: Boundary) -> tuple:
    pts = boundary.distinct
    c = center(boundary)
    diameter = 2.0 * float(np.linalg.norm(pts - c, axis=1).max())
    return tuple(diameter / (1 << k) for k in range(6, 1, -1))


def fractal_dimension(boundary: Boundary, ruler_sizes=None) -> float:
    """Magnitude of the slope of log measured perimeter versus log ruler size."""
    if ruler_sizes is None:
        ruler_sizes = default_rulers(boundary)
    ruler_sizes = tuple(float(r) for r in ruler_sizes)
    if len(ruler_sizes) < 3:
        raise InvalidInputError(f"need at least 3 ruler sizes, got {len(ruler_sizes)}")
    logs = []
    for ruler in ruler_sizes:
        length = divider_length(boundary, ruler)
        if length is None:  # ruler longer than the shape; skip it
            continue
        logs.append((math.log(ruler), math.log(length)))
    if len(logs) < 2:
        raise InvalidInputError("all rulers were too large for this boundary")
    xs, ys = zip(*logs)
    slope = np.polyfit(xs, ys, 1)[0]
    return float(abs(slope))


# -- composition ---------------------------------------------------------------


def extract_all(
    boundary: Boundary, grid: PixelGrid | None = None, params: FeatureParams = FeatureParams()
) -> FeatureSet:
    """All ten features; texture requires a grid, area uses pixel mode when given."""
    perim = perimeter(boundary)
    enclosed = area(boundary, grid)
    return FeatureSet(
        radius=radius(boundary),
        texture=texture(grid) if grid is not None and grid.intensities is not None else None,
        perimeter=perim,
        area=enclosed,
        compactness=compactness(perim, enclosed),
        smoothness=smoothness(boundary),
        concavity=concavity(boundary, params.chord_span),
        concave_points=concave_points(boundary, params.chord_span),
        symmetry=symmetry(boundary, params.symmetry_intervals),
        fractal_dimension=fractal_dimension(boundary, params.ruler_sizes),
    )
