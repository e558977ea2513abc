"""Brute-force references built without the optimizer."""

import itertools

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from cogcic.bounds import KINDS
from cogcic.regions import hull_of


def simplex_points(cells: int, step: float) -> np.ndarray:
    """Every pmf on ``cells`` symbols whose entries are multiples of ``step`` (stars and bars)."""
    m = int(round(1 / step))
    bars = np.array(list(itertools.combinations(range(m + cells - 1), cells - 1)), dtype=np.int64)
    edges = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), m + cells - 1)])
    return (np.diff(edges, axis=1) - 1) / m


def _entropy(j: np.ndarray, keep: tuple[int, ...]) -> np.ndarray:
    """Batched entropy of the marginal on axes ``keep`` (axis 0 is the batch)."""
    drop = tuple(ax for ax in range(1, j.ndim) if ax not in keep)
    m = j.sum(axis=drop) if drop else j
    m = m.reshape(len(m), -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(m > 0, -m * np.log2(m), 0.0)
    return t.sum(axis=1)


def _expr(j: np.ndarray, names: list[str], expr) -> np.ndarray:
    idx = lambda vs: tuple(names.index(v) + 1 for v in vs)  # noqa: E731
    total = np.zeros(len(j))
    for term in expr:
        a, b, c = idx(term.a), idx(term.b), idx(term.c)
        val = _entropy(j, a + c) + _entropy(j, b + c) - _entropy(j, a + b + c)
        if c:
            val = val - _entropy(j, c)
        total += term.coef * val
    return total


def grid_region(ch, kind: str, aux_card: int, step: float, chunk: int = 50_000):
    """Hull of every polytope of ``kind`` over a grid on ``p(aux, x1, x2)``."""
    k = KINDS[kind]
    assert len(k.aux) == 1 and not k.product
    names = [k.aux[0], "x1", "x2", "y1", "y2"]
    shape = (aux_card, ch.nx1, ch.nx2)
    grid = simplex_points(int(np.prod(shape)), step)
    pts = []
    for s in range(0, len(grid), chunk):
        p = grid[s : s + chunk].reshape((-1,) + shape)
        j = p[..., None, None] * ch.p[None, None]
        a = _expr(j, names, k.r1) if k.r1 is not None else np.full(len(j), np.inf)
        b = _expr(j, names, k.r2) if k.r2 is not None else np.full(len(j), np.inf)
        c = np.full(len(j), np.inf)
        for e in k.sums:
            c = np.minimum(c, _expr(j, names, e))
        a, b, c = (np.maximum(v, 0.0) for v in (a, b, c))
        r1, r2 = np.minimum(a, c), np.minimum(b, c)
        pts.append(np.column_stack([r1, np.maximum(np.minimum(b, c - r1), 0.0)]))
        pts.append(np.column_stack([np.maximum(np.minimum(a, c - r2), 0.0), r2]))
    cloud = np.vstack(pts + [np.zeros((1, 2))])
    try:
        cloud = cloud[ConvexHull(cloud).vertices]
    except QhullError:
        pass
    return hull_of(cloud)


def lp_corners(a: float, b: float, c: float) -> set[tuple[float, float]]:
    """Vertices of ``{0 <= R1 <= a, 0 <= R2 <= b, R1 + R2 <= c}`` by enumerating line pairs."""
    lines = [(1, 0, 0.0), (0, 1, 0.0), (1, 0, a), (0, 1, b), (1, 1, c)]
    out = set()
    for (p1, q1, s1), (p2, q2, s2) in itertools.combinations(lines, 2):
        det = p1 * q2 - p2 * q1
        if det == 0:
            continue
        x, y = (s1 * q2 - s2 * q1) / det, (p1 * s2 - p2 * s1) / det
        if x >= -1e-12 and y >= -1e-12 and x <= a + 1e-12 and y <= b + 1e-12 and x + y <= c + 1e-12:
            out.add((round(x, 12) + 0.0, round(y, 12) + 0.0))
    return out
