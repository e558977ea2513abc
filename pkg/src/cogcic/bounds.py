"""Rate regions of the cognitive channel, computed by searching input distributions.

Every region here is a union, over a family of input distributions, of a
polytope ``{R1 <= a, R2 <= b, R1 + R2 <= c}`` whose bounds are mutual
informations. The union is approximated from below: a sweep of weight
directions, multistart projected ascent per direction, and a deterministic
grid pass when both inputs are binary. The convex hull of all polytope
corners found is the returned region.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .channel import AuxInput, ChannelError, CicChannel, push_forward
from .optimize import (
    Evaluator,
    Expr,
    Family,
    JointFamily,
    Objective,
    ProductFamily,
    ascend,
    evaluate_direct,
    expr_str,
    mi,
    simplex_grid,
    task_rng,
)
from .regions import RatePoint, RateRegion, as_point, hull_of

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 4
    weight_sweep: int = 9
    max_iters: int = 400
    step_tol: float = 1e-10
    seed: int = 0
    aux_card: int | None = None
    grid_step: float = 0.1
    refine_rounds: int = 6
    anneal: tuple[float, ...] = (0.05, 0.005)
    max_directions: int = 24
    refine_tol: float = 1e-6

    def __post_init__(self):
        for name in ("restarts", "weight_sweep", "max_iters", "max_directions"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")
        if not self.step_tol > 0:
            raise ValueError("step_tol must be > 0")
        if self.aux_card is not None and self.aux_card < 1:
            raise ValueError("aux_card must be >= 1")

    def angles(self) -> list[float]:
        k = self.weight_sweep
        if k == 1:
            return [math.pi / 4]
        return [0.5 * math.pi * i / (k - 1) for i in range(k)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "restarts": self.restarts,
            "weight_sweep": self.weight_sweep,
            "max_iters": self.max_iters,
            "step_tol": self.step_tol,
            "seed": self.seed,
            "aux_card": self.aux_card,
            "grid_step": self.grid_step,
            "refine_rounds": self.refine_rounds,
            "max_directions": self.max_directions,
            "anneal": list(self.anneal),
        }


@dataclass(frozen=True)
class RegionKind:
    key: str
    title: str
    aux: tuple[str, ...]
    r1: Expr | None
    r2: Expr | None
    sums: tuple[Expr, ...] = ()
    product: bool = False
    outer: bool = False

    @property
    def exprs(self) -> list[Expr]:
        return [e for e in (self.r1, self.r2) if e is not None] + list(self.sums)

    def describe(self) -> list[str]:
        out = []
        if self.r1 is not None:
            out.append(f"R1 <= {expr_str(self.r1)}")
        if self.r2 is not None:
            out.append(f"R2 <= {expr_str(self.r2)}")
        out += [f"R1 + R2 <= {expr_str(s)}" for s in self.sums]
        return out


KINDS: dict[str, RegionKind] = {
    k.key: k
    for k in (
        RegionKind(
            "thm1", "outer bound", ("u", "v"),
            (mi("u", "y1"),), (mi("v", "y2"),),
            ((mi("x2", "y2", "u"), mi("u", "y1")), (mi("x1", "y1", "v"), mi("v", "y2"))),
            outer=True,
        ),
        RegionKind(
            "thm2", "superposition inner bound", ("w",),
            (mi("w x1", "y1"),), (mi("x2", "y2", "w x1"),), ((mi("x1 x2", "y2"),),),
        ),
        RegionKind(
            "thm3", "independent-coding inner bound", ("w",),
            (mi("x1", "y1", "w x2"),), (mi("w x2", "y2"),), ((mi("x1 x2", "y1"),),),
            product=True,
        ),
        # the auxiliary carries X1 (U = (W, X1)): the primary input cannot depend on m2
        RegionKind("thm4", "cognitive-less-noisy capacity", ("u",), (mi("u x1", "y1"),), (mi("x2", "y2", "u x1"),)),
        RegionKind("cor1", "cognitive-less-noisy capacity, (W,X1) form", ("w",), (mi("w x1", "y1"),), (mi("x2", "y2", "w x1"),)),
        RegionKind(
            "cor2", "primary-less-noisy achievable region", ("w",),
            (mi("x1", "y1", "w x2"),), (mi("w x2", "y2"),), product=True,
        ),
        RegionKind("c1", "strong interference", (), None, (mi("x2", "y2", "x1"),), ((mi("x1 x2", "y1"),),)),
        RegionKind("c2", "weak interference", ("u",), (mi("u x1", "y1"),), (mi("x2", "y2", "u x1"),)),
        RegionKind(
            "c3", "better cognitive decoding", ("u",),
            (mi("u x1", "y1"),), (mi("x2", "y2", "x1"),), ((mi("u x1", "y1"), mi("x2", "y2", "u x1")),),
        ),
        RegionKind("strong", "strong interference, rectangle form", (), (mi("x1", "y1"),), (mi("x2", "y2", "x1"),)),
        RegionKind(
            "region1", "sum-rate form of the cognitive outer bound", ("u",),
            (mi("u", "y1"),), None, ((mi("x2", "y2", "u"), mi("u", "y1")),),
        ),
    )
}


# -- polytope geometry --------------------------------------------------------


def _bounds(kind: RegionKind, vals: Sequence[float]) -> tuple[float, float, float, int]:
    """``(a, b, c, active_sum)`` from expression values, clamped to be nonnegative."""
    i = 0
    a = b = math.inf
    if kind.r1 is not None:
        a = max(float(vals[i]), 0.0)
        i += 1
    if kind.r2 is not None:
        b = max(float(vals[i]), 0.0)
        i += 1
    c, active = math.inf, -1
    for j in range(len(kind.sums)):
        v = max(float(vals[i + j]), 0.0)
        if v < c:
            c, active = v, j
    return a, b, c, active


def corners(a: float, b: float, c: float) -> list[RatePoint]:
    """Vertices of ``{R1 <= a, R2 <= b, R1 + R2 <= c}`` in the nonnegative quadrant."""
    r1max, r2max = min(a, c), min(b, c)
    p1 = RatePoint(r1max, max(0.0, min(b, c - r1max)))
    p2 = RatePoint(max(0.0, min(a, c - r2max)), r2max)
    out = []
    for p in (RatePoint(0.0, 0.0), RatePoint(r1max, 0.0), p1, p2, RatePoint(0.0, r2max)):
        if p not in out:
            out.append(p)
    return out


def polytope_points(kind: RegionKind | str, vals: Sequence[float]) -> list[RatePoint]:
    kind = KINDS[kind] if isinstance(kind, str) else kind
    a, b, c, _ = _bounds(kind, vals)
    return corners(a, b, c)


def support_pieces(kind: RegionKind, l1: float, l2: float) -> np.ndarray:
    """Rows ``y`` with ``support(l1, l2) = min_y y @ vals``: the vertices of the dual LP.

    For ``l1 >= l2`` the dual vertices put weight ``(l1, l2, 0)``,
    ``(l1 - l2, 0, l2)`` or ``(0, 0, l1)`` on ``(a, b, c)``; the other case is
    the mirror image. Pieces that would weight an absent (infinite) bound are
    dropped, and every sum constraint gets its own pieces.
    """
    n_single = (kind.r1 is not None) + (kind.r2 is not None)
    m = n_single + len(kind.sums)
    ia = 0 if kind.r1 is not None else None
    ib = n_single - 1 if kind.r2 is not None else None
    if l1 >= l2:
        duals = [(l1, l2, 0.0), (l1 - l2, 0.0, l2), (0.0, 0.0, l1)]
    else:
        duals = [(l1, l2, 0.0), (0.0, l2 - l1, l1), (0.0, 0.0, l2)]
    sums = list(range(n_single, m)) or [None]
    rows = []
    for ya, yb, yc in duals:
        for ic in sums:
            if (ya and ia is None) or (yb and ib is None) or (yc and ic is None):
                continue
            row = np.zeros(m)
            if ya:
                row[ia] += ya
            if yb:
                row[ib] += yb
            if yc:
                row[ic] += yc
            rows.append(row)
    if not rows:
        raise ValueError(f"{kind.key}: region unbounded in direction ({l1}, {l2})")
    return np.unique(np.array(rows), axis=0)


def _support_weights(kind: RegionKind, l1: float, l2: float, tau: float = 0.0):
    """Support function in direction ``(l1, l2)`` as a function of the expression values.

    With ``tau > 0`` the minimum over dual pieces is replaced by a soft
    minimum at temperature ``tau``, which removes the kinks where pieces tie.
    """
    rows = support_pieces(kind, l1, l2)

    def weights(vals):
        f = rows @ vals
        if tau > 0:
            z = -(f - f.min()) / tau
            w = np.exp(z)
            s = w.sum()
            return f.min() - tau * np.log(s), (w / s) @ rows
        i = int(np.argmin(f))
        return float(f[i]), rows[i]

    return weights


# -- search ------------------------------------------------------------------


@dataclass
class RegionResult:
    kind: str
    region: RateRegion
    argmax_dists: list[AuxInput | None]
    budget_used: dict[str, Any]
    converged: bool
    approximation: str = "sampled inner approximation of the union"
    constraints: list[str] = field(default_factory=list)

    @property
    def vertices(self) -> tuple[RatePoint, ...]:
        return self.region.vertices

    def to_dict(self, with_dists: bool = True) -> dict[str, Any]:
        d: dict[str, Any] = {
            "kind": self.kind,
            "approximation": self.approximation,
            "constraints": self.constraints,
            "vertices": self.region.to_rows(),
            "budget": self.budget_used,
            "converged": self.converged,
        }
        if with_dists:
            d["argmax_dists"] = [None if x is None else x.to_dict() for x in self.argmax_dists]
        return d


def default_aux_card(ch: CicChannel) -> int:
    return ch.nx1 * ch.nx2 + 2


def make_family(kind: RegionKind, ch: CicChannel, aux_card: int | None) -> Family:
    k = aux_card or default_aux_card(ch)
    if kind.product:
        return ProductFamily(k, ch.nx1, ch.nx2)
    return JointFamily(kind.aux + ("x1", "x2"), (k,) * len(kind.aux), ch.nx1, ch.nx2)


def _grid_starts(family: Family, ch: CicChannel, step: float) -> list[list[np.ndarray]]:
    if ch.nx1 > 2 or ch.nx2 > 2:
        return []
    if isinstance(family, ProductFamily):
        g1, g2 = simplex_grid(ch.nx1, step), simplex_grid(ch.nx2, step)
        return [blocks for p1 in g1 for p2 in g2 for blocks in family.from_marginals(p1, p2)]
    assert isinstance(family, JointFamily)
    out = []
    for px in simplex_grid(ch.nx1 * ch.nx2, step):
        out += [[j] for j in family.embedded(px.reshape(ch.nx1, ch.nx2))]
    return out


class _Search:
    """Shared state of one region computation: candidate corners and the distributions behind them."""

    def __init__(self, ch: CicChannel, kind: RegionKind, budget: SearchBudget):
        self.kind, self.budget = kind, budget
        self.family = make_family(kind, ch, budget.aux_card)
        self.ev = Evaluator(ch, self.family.names, kind.exprs)
        self.points: list[RatePoint] = []
        self.source: dict[RatePoint, list[np.ndarray]] = {}
        self.runs = self.iters = self.evals = 0
        self.converged = True

    def record(self, blocks, vals) -> None:
        for p in polytope_points(self.kind, vals):
            p = as_point(p)
            self.points.append(p)
            self.source.setdefault(p, [b.copy() for b in blocks])

    def run(self, theta: float, start) -> float:
        l1, l2 = math.cos(theta), math.sin(theta)
        blocks = start
        for tau in self.budget.anneal + (0.0,):
            obj = Objective(self.ev, self.family, _support_weights(self.kind, l1, l2, tau))
            res = ascend(obj, blocks, self.budget.max_iters, self.budget.step_tol)
            blocks = res.blocks
            self.record(res.blocks, res.vals)
            self.iters += res.iterations
            self.evals += obj.evaluations
        self.runs += 1
        self.converged &= res.converged
        return res.value


# spawn-key prefix for streams used before the random phase; restart streams use (k, r)
_DETERMINISTIC = 2**32


def _jitter(family: Family, blocks, rng: np.random.Generator, weight: float = 0.1) -> list[np.ndarray]:
    """Move a start off the simplex boundary, where degenerate distributions stall the ascent."""
    noise = family.random(rng, 1.0)
    return [(1 - weight) * b + weight * n for b, n in zip(blocks, noise)]


def _normal_angle(p: RatePoint, q: RatePoint) -> float | None:
    """Angle in [0, pi/2] of the outward normal of the boundary edge ``p -> q``."""
    n1, n2 = q.r2 - p.r2, p.r1 - q.r1
    if n1 < -1e-12 or n2 < -1e-12 or n1 * n1 + n2 * n2 < 1e-24:
        return None
    return math.atan2(max(n2, 0.0), max(n1, 0.0))


def compute_region(ch: CicChannel, kind: str | RegionKind, budget: SearchBudget | None = None) -> RegionResult:
    """Sampled hull of the union of ``kind``'s polytopes over its distribution family.

    Directions are fixed before any random restart runs: the uniform sweep plus
    edge normals found by refining from deterministic starts. Random restarts
    then run on every direction, so more restarts only ever add candidates.
    """
    kind = KINDS[kind] if isinstance(kind, str) else kind
    budget = budget or SearchBudget()
    s = _Search(ch, kind, budget)
    family = s.family

    grid = _grid_starts(family, ch, budget.grid_step)
    for blocks in grid:
        s.record(blocks, s.ev.values(family.assemble(blocks)))

    # deterministic phase: structured starts, then edge-normal refinement
    angles = budget.angles()
    for k, theta in enumerate(angles):
        for j, start in enumerate(family.structured()):
            s.run(theta, start)
            s.run(theta, _jitter(family, start, task_rng(budget.seed, _DETERMINISTIC, k, j)))
    for _ in range(budget.refine_rounds):
        hull = hull_of(s.points)
        added = False
        for p, q in hull.outer_edges():
            if len(angles) >= budget.max_directions:
                break
            theta = _normal_angle(p, q)
            if theta is None or any(abs(theta - t) < 1e-9 for t in angles):
                continue
            edge_value = math.cos(theta) * p.r1 + math.sin(theta) * p.r2
            k = len(angles)
            best = max(
                s.run(theta, _jitter(family, s.source[v], task_rng(budget.seed, _DETERMINISTIC, k, j)))
                for j, v in enumerate((p, q))
                if v in s.source
            )
            angles.append(theta)
            if best > edge_value + budget.refine_tol:
                added = True
        if not added:
            break

    # random phase over the now fixed direction set
    for k, theta in enumerate(angles):
        for r in range(budget.restarts):
            rng = task_rng(budget.seed, k, r)
            s.run(theta, family.random(rng, 1.0 if r % 2 == 0 else 0.25))

    region = hull_of(s.points)
    dists = [None if v == RatePoint(0.0, 0.0) else family.aux_input(family.assemble(_lookup(s.source, v))) for v in region.vertices]
    used = budget.to_dict() | {
        "directions": len(angles),
        "runs": s.runs,
        "iterations": s.iters,
        "evaluations": s.evals,
        "grid_points": len(grid),
        "aux_card": budget.aux_card or default_aux_card(ch),
    }
    approx = (
        "sampled approximation of an outer bound (union approximated from below)"
        if kind.outer
        else "sampled inner approximation of the union"
    )
    return RegionResult(kind.key, region, dists, used, s.converged, approx, kind.describe())


def _lookup(source: dict[RatePoint, list[np.ndarray]], v: RatePoint) -> list[np.ndarray]:
    if v in source:
        return source[v]
    best = min(source, key=lambda p: max(abs(p.r1 - v.r1), abs(p.r2 - v.r2)))
    return source[best]


def polytope(ch: CicChannel, kind: str | RegionKind, inp: AuxInput) -> list[RatePoint]:
    """Corners of ``kind``'s polytope for one fixed distribution, evaluated through :mod:`cogcic.prob`."""
    kind = KINDS[kind] if isinstance(kind, str) else kind
    if inp.aux_names != kind.aux:
        raise ChannelError(f"{kind.key} needs auxiliaries {kind.aux}, got {inp.aux_names}")
    if kind.product and inp.factorization != "product":
        raise ChannelError(f"{kind.key} needs a p(x1) p(w, x2) input")
    joint = push_forward(ch, inp)
    return polytope_points(kind, [evaluate_direct(joint, e) for e in kind.exprs])


def certify(result: RegionResult, ch: CicChannel, tol: float = 1e-6) -> list[float]:
    """Re-evaluate every vertex from its stored distribution; return per-vertex excess (<= tol when sound)."""
    kind = KINDS[result.kind]
    out = []
    for v, inp in zip(result.region.vertices, result.argmax_dists):
        if inp is None:
            out.append(0.0)
            continue
        joint = push_forward(ch, inp)
        a, b, c, _ = _bounds(kind, [evaluate_direct(joint, e) for e in kind.exprs])
        out.append(max(v.r1 - a, v.r2 - b, v.r1 + v.r2 - c, 0.0))
    return out


# -- named operations ------------------------------------------------------------


def polytope_thm2(ch: CicChannel, inp: AuxInput) -> list[RatePoint]:
    return polytope(ch, "thm2", inp)


def inner_region_thm2(ch: CicChannel, budget: SearchBudget | None = None) -> RegionResult:
    return compute_region(ch, "thm2", budget)


def inner_region_thm3(ch: CicChannel, budget: SearchBudget | None = None) -> RegionResult:
    return compute_region(ch, "thm3", budget)


def outer_region_thm1(ch: CicChannel, budget: SearchBudget | None = None) -> RegionResult:
    return compute_region(ch, "thm1", budget)


def _precheck(ch: CicChannel, which: str, precheck: bool) -> None:
    if not precheck:
        return
    from .conditions import Status, check_cognitive_less_noisy, check_primary_less_noisy

    fn = check_cognitive_less_noisy if which == "cognitive" else check_primary_less_noisy
    verdict = fn(ch)
    if verdict.status != Status.HOLDS:
        log.warning(
            "channel %s is not certified %s-less-noisy (%s); the region is computed anyway",
            ch.name or "<unnamed>", which, verdict.status.value,
        )


def capacity_cln_thm4(ch: CicChannel, budget: SearchBudget | None = None, precheck: bool = True) -> RegionResult:
    _precheck(ch, "cognitive", precheck)
    return compute_region(ch, "thm4", budget)


def capacity_cln_cor1(ch: CicChannel, budget: SearchBudget | None = None, precheck: bool = True) -> RegionResult:
    _precheck(ch, "cognitive", precheck)
    return compute_region(ch, "cor1", budget)


def achievable_pln_cor2(ch: CicChannel, budget: SearchBudget | None = None, precheck: bool = True) -> RegionResult:
    _precheck(ch, "primary", precheck)
    return compute_region(ch, "cor2", budget)


def region_c1(ch: CicChannel, budget: SearchBudget | None = None) -> RegionResult:
    return compute_region(ch, "c1", budget)


def region_c2(ch: CicChannel, budget: SearchBudget | None = None) -> RegionResult:
    return compute_region(ch, "c2", budget)


def region_c3(ch: CicChannel, budget: SearchBudget | None = None) -> RegionResult:
    return compute_region(ch, "c3", budget)


def strong_interference_reexpression(ch: CicChannel, budget: SearchBudget | None = None) -> RegionResult:
    return compute_region(ch, "strong", budget)


def representation_region1(ch: CicChannel, budget: SearchBudget | None = None) -> RegionResult:
    """Hull of ``{R1 <= I(U;Y1), R1 + R2 <= I(X2;Y2|U) + I(U;Y1)}``; compare with :func:`capacity_cln_thm4`."""
    return compute_region(ch, "region1", budget)


OPERATIONS = {
    "thm1": outer_region_thm1,
    "thm2": inner_region_thm2,
    "thm3": inner_region_thm3,
    "thm4": capacity_cln_thm4,
    "cor1": capacity_cln_cor1,
    "cor2": achievable_pln_cor2,
    "c1": region_c1,
    "c2": region_c2,
    "c3": region_c3,
    "strong": strong_interference_reexpression,
    "region1": representation_region1,
}


@dataclass
class RedundancyReport:
    samples: int
    applicable: int
    violations: int
    max_excess: float
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def sum_rate_redundancy(
    ch: CicChannel, samples: int = 10_000, seed: int = 0, aux_card: int | None = None, tol: float = 1e-9
) -> RedundancyReport:
    """Sample ``p(w, x1, x2)`` and test ``I(W,X1;Y1) + I(X2;Y2|W,X1) <= I(X1,X2;Y2) + tol``.

    Only samples with ``I(W,X1;Y1) <= I(W,X1;Y2)`` are tested; for those the
    chain rule makes the sum constraint of the superposition region inactive.
    """
    from .conditions import sample_inputs

    k = aux_card or default_aux_card(ch)
    ev = Evaluator(
        ch,
        ("w", "x1", "x2"),
        [(mi("w x1", "y1"),), (mi("w x1", "y2"),), (mi("x2", "y2", "w x1"),), (mi("x1 x2", "y2"),)],
    )
    rng = task_rng(seed, 2)
    applicable = violations = 0
    worst = -math.inf
    for i in range(samples):
        a1, a2, b, c = ev.values(sample_inputs(rng, (k, ch.nx1, ch.nx2), i))
        if a1 > a2:
            continue
        applicable += 1
        excess = a1 + b - c
        worst = max(worst, excess)
        if excess > tol:
            violations += 1
    return RedundancyReport(samples, applicable, violations, float(worst), seed)
