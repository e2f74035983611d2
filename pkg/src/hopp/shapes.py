"""Synthetic boundary fixtures for geometry tests and the CLI."""

from __future__ import annotations

import math

import numpy as np

from .features import Boundary


def circle(radius: float = 100.0, n_points: int = 720, center=(0.0, 0.0)) -> Boundary:
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    cx, cy = center
    pts = np.column_stack([cx + radius * np.cos(theta), cy + radius * np.sin(theta)])
    return Boundary.from_points(pts)


def ellipse(a: float = 120.0, b: float = 60.0, n_points: int = 720, center=(0.0, 0.0)) -> Boundary:
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    cx, cy = center
    pts = np.column_stack([cx + a * np.cos(theta), cy + b * np.sin(theta)])
    return Boundary.from_points(pts)


def _edge(a, b, n):
    """n points from a toward b, excluding b."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    ts = np.arange(n) / n
    return a + ts[:, None] * (b - a)


def square(side: float = 100.0, points_per_edge: int = 1) -> Boundary:
    corners = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)]
    pts = np.vstack(
        [_edge(corners[i], corners[(i + 1) % 4], points_per_edge) for i in range(4)]
    )
    return Boundary.from_points(pts)


def notched_square(
    side: float = 100.0,
    points_per_edge: int = 25,
    notch_halfwidth: float = 10.0,
    notch_depth: float = 15.0,
    notch_points: int = 5,
) -> Boundary:
    """Square with a triangular notch cut into the bottom edge.

    The notch mouth spans [side/2 - hw, side/2 + hw] and its apex reaches
    notch_depth into the square, so the removed area is hw * depth. The V is
    sampled with notch_points vertices strictly inside the square.
    """
    if not 0 < notch_halfwidth < side / 2 or not 0 < notch_depth < side:
        raise ValueError("notch does not fit inside the square")
    mouth_l = np.array([side / 2 - notch_halfwidth, 0.0])
    mouth_r = np.array([side / 2 + notch_halfwidth, 0.0])
    apex = np.array([side / 2, notch_depth])
    # sample the V at exactly notch_points vertices strictly inside (apex included)
    leg = (notch_points + 1) // 2
    down = [mouth_l + t * (apex - mouth_l) for t in np.linspace(0, 1, leg + 1)[1:]]
    up = [apex + t * (mouth_r - apex) for t in np.linspace(0, 1, notch_points - leg + 2)[1:-1]]
    notch = [mouth_l] + down + up

    corners = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)]
    bottom_a = _edge(corners[0], mouth_l, max(1, int(points_per_edge * (mouth_l[0] / side))))
    bottom_b = _edge(mouth_r, corners[1], max(1, int(points_per_edge * (1 - mouth_r[0] / side))))
    pts = np.vstack(
        [bottom_a, notch, bottom_b]
        + [_edge(corners[i], corners[(i + 1) % 4], points_per_edge) for i in (1, 2, 3)]
    )
    return Boundary.from_points(pts)


def koch_snowflake(side: float = 1.0, iterations: int = 4) -> Boundary:
    """Equilateral triangle with each edge replaced by Koch-curve refinements."""

    def refine(pts):
        out = []
        for a, b in zip(pts[:-1], pts[1:]):
            d = (b - a) / 3.0
            p1 = a + d
            p2 = a + 2.0 * d
            # outward bump: rotate d by -60 degrees (clockwise) for a CCW outline
            bump = p1 + np.array(
                [d[0] * 0.5 + d[1] * math.sqrt(3) / 2, -d[0] * math.sqrt(3) / 2 + d[1] * 0.5]
            )
            out.extend([a, p1, bump, p2])
        out.append(pts[-1])
        return np.array(out)

    h = side * math.sqrt(3) / 2
    triangle = np.array([[0.0, 0.0], [side, 0.0], [side / 2, h], [0.0, 0.0]])
    pts = triangle
    for _ in range(iterations):
        pts = refine(pts)
    return Boundary(pts)


def asymmetric_kite(points_per_edge: int = 40) -> Boundary:
    """Quadrilateral with no mirror symmetry about its longest center chord."""
    corners = [(0.0, 0.0), (2.2, 0.9), (3.0, 0.0), (1.0, -1.4)]
    pts = np.vstack(
        [_edge(corners[i], corners[(i + 1) % 4], points_per_edge) for i in range(4)]
    )
    return Boundary.from_points(pts)


SHAPES = {
    "circle": circle,
    "ellipse": ellipse,
    "square": square,
    "notched-square": notched_square,
    "koch": koch_snowflake,
    "kite": asymmetric_kite,
}
