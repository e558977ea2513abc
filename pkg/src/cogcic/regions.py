"""Two-dimensional rate regions.

A :class:`RateRegion` is a convex polygon in the nonnegative quadrant that
contains the origin and is closed under lowering either coordinate. Vertices
are stored counterclockwise starting at the origin, so the polygon always
reads ``(0,0) -> (r1_max, 0) -> ... -> (0, r2_max)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

COLLINEAR_TOL = 1e-9
SELF_TOL = 1e-9
BOUND_TOL = 1e-3
_SLACK = 1e-12
SNAP_TOL = 1e-12


class RatePoint(NamedTuple):
    r1: float
    r2: float


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def as_point(p) -> RatePoint:
    r1, r2 = float(p[0]), float(p[1])
    if not (math.isfinite(r1) and math.isfinite(r2)):
        raise ValueError(f"non-finite rate pair {p!r}")
    # round-off below SNAP_TOL is treated as zero
    return RatePoint(r1 if r1 > SNAP_TOL else 0.0, r2 if r2 > SNAP_TOL else 0.0)


@dataclass(frozen=True)
class RateRegion:
    vertices: tuple[RatePoint, ...]

    def __post_init__(self):
        vs = tuple(as_point(v) for v in self.vertices)
        if not vs or vs[0] != RatePoint(0.0, 0.0):
            raise ValueError("region vertices must start at the origin")
        object.__setattr__(self, "vertices", vs)

    @property
    def r1_max(self) -> float:
        return max(v.r1 for v in self.vertices)

    @property
    def r2_max(self) -> float:
        return max(v.r2 for v in self.vertices)

    def area(self) -> float:
        vs = self.vertices
        return 0.5 * sum(vs[i - 1].r1 * vs[i].r2 - vs[i].r1 * vs[i - 1].r2 for i in range(len(vs)))

    def outer_edges(self) -> list[tuple[RatePoint, RatePoint]]:
        """Edges of the staircase-free outer boundary, from the R1 axis to the R2 axis."""
        vs = self.vertices
        return [(vs[i], vs[i + 1]) for i in range(1, len(vs) - 1)]

    def support(self, l1: float, l2: float) -> float:
        return max(l1 * v.r1 + l2 * v.r2 for v in self.vertices)

    def scaled(self, factor: float) -> "RateRegion":
        return RateRegion(tuple(RatePoint(v.r1 * factor, v.r2 * factor) for v in self.vertices))

    def to_rows(self) -> list[list[float]]:
        return [[v.r1, v.r2] for v in self.vertices]


def hull_of(points: Iterable[Sequence[float]]) -> RateRegion:
    """Convex, downward-closed hull of ``points``, their axis projections and the origin."""
    pts = [as_point(p) for p in points]
    if not pts:
        raise ValueError("hull_of needs at least one point")
    cloud = {RatePoint(0.0, 0.0)}
    for p in pts:
        cloud.update((p, RatePoint(p.r1, 0.0), RatePoint(0.0, p.r2)))
    ordered = sorted(cloud)
    if len(ordered) == 1:
        return RateRegion((RatePoint(0.0, 0.0),))
    lower: list[RatePoint] = []
    for p in ordered:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[RatePoint] = []
    for p in reversed(ordered):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    ring = lower[:-1] + upper[:-1]
    ring = _prune_collinear(_drop_near_duplicates(ring))
    k = ring.index(RatePoint(0.0, 0.0)) if RatePoint(0.0, 0.0) in ring else 0
    return RateRegion(tuple(ring[k:] + ring[:k]))


def _drop_near_duplicates(ring: list[RatePoint]) -> list[RatePoint]:
    out: list[RatePoint] = []
    for p in ring:
        if out and max(abs(p.r1 - out[-1].r1), abs(p.r2 - out[-1].r2)) <= SNAP_TOL:
            if p == RatePoint(0.0, 0.0):
                out[-1] = p
            continue
        out.append(p)
    while len(out) > 1 and max(abs(out[0].r1 - out[-1].r1), abs(out[0].r2 - out[-1].r2)) <= SNAP_TOL:
        out.pop(-1 if out[0] == RatePoint(0.0, 0.0) else 0)
    return out


def _prune_collinear(ring: list[RatePoint]) -> list[RatePoint]:
    changed = True
    while changed and len(ring) > 2:
        changed = False
        for i in range(len(ring)):
            a, b, c = ring[i - 1], ring[i], ring[(i + 1) % len(ring)]
            if b == RatePoint(0.0, 0.0):
                continue
            if abs(_cross(a, b, c)) <= COLLINEAR_TOL:
                del ring[i]
                changed = True
                break
    return ring


def _inside(region: RateRegion, p: tuple[float, float]) -> bool:
    if p[0] < 0 or p[1] < 0:
        return False
    for a, b in region.outer_edges():
        if _cross(a, b, p) < -_SLACK:
            return False
    if len(region.vertices) == 1:
        return p[0] <= 0 and p[1] <= 0
    return p[0] <= region.r1_max + _SLACK and p[1] <= region.r2_max + _SLACK


def distance(region: RateRegion, point: Sequence[float]) -> float:
    """Sup-norm distance from ``point`` to ``region`` (zero inside).

    For a downward-closed region this is the least ``t`` such that
    ``max(point - t, 0)`` lies inside.
    """
    x, y = max(float(point[0]), 0.0), max(float(point[1]), 0.0)
    if _inside(region, (x, y)):
        return 0.0
    lo, hi = 0.0, max(x, y)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _inside(region, (max(x - mid, 0.0), max(y - mid, 0.0))):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return hi


def contains(region: RateRegion, point: Sequence[float], tol: float = SELF_TOL) -> bool:
    return distance(region, point) <= tol + _SLACK


def gap(a: RateRegion, b: RateRegion) -> float:
    """One-sided Hausdorff distance: how far ``a`` sticks out of ``b``."""
    return max(distance(b, v) for v in a.vertices)


def subset(a: RateRegion, b: RateRegion, tol: float = SELF_TOL) -> bool:
    return gap(a, b) <= tol + _SLACK


def equal(a: RateRegion, b: RateRegion, tol: float = SELF_TOL) -> bool:
    return subset(a, b, tol) and subset(b, a, tol)


def to_csv(region: RateRegion) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r1", "r2"])
    for v in region.vertices:
        w.writerow([repr(v.r1), repr(v.r2)])
    return buf.getvalue()


def from_csv(text: str) -> RateRegion:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["r1", "r2"]:
        raise ValueError("expected an 'r1,r2' header")
    return RateRegion(tuple(RatePoint(float(a), float(b)) for a, b in rows[1:] if a or b))
