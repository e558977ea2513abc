"""Multistart projected ascent of mutual-information objectives over input distributions.

Objectives are linear combinations of terms ``I(A;B|C)`` evaluated on the full
joint ``p(aux..., x1, x2) p(y1, y2 | x1, x2)``. Each term expands into four
marginal entropies, whose gradients are ``-log2`` of the marginal, so values
and exact gradients come out of the same pass. The constant ``-1/ln 2`` part of
every entropy gradient is dropped: the simplex projection ignores uniform
shifts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .channel import AuxInput, CicChannel, push_forward
from .prob import ProbTensor, conditional_mutual_information

_LOG_FLOOR = 1e-15
OUTPUTS = ("y1", "y2")


class MI(NamedTuple):
    """``coef * I(a; b | c)`` over named variables."""

    a: tuple[str, ...]
    b: tuple[str, ...]
    c: tuple[str, ...] = ()
    coef: float = 1.0


Expr = tuple[MI, ...]


def mi(a: str, b: str, c: str = "", coef: float = 1.0) -> MI:
    """Shorthand: ``mi("w x1", "y1")`` is ``I(W,X1;Y1)``."""
    return MI(tuple(a.split()), tuple(b.split()), tuple(c.split()), coef)


def expr_str(e: Expr) -> str:
    parts = []
    for t in e:
        s = f"I({','.join(t.a)};{','.join(t.b)}" + (f"|{','.join(t.c)})" if t.c else ")")
        parts.append(s if t.coef == 1 else f"{t.coef:g}*{s}")
    return " + ".join(parts)


def evaluate_direct(joint: ProbTensor, e: Expr) -> float:
    """Evaluate an expression on a labelled joint through :mod:`cogcic.prob` only."""
    return sum(
        t.coef * conditional_mutual_information(joint, list(t.a), list(t.b), list(t.c)) for t in e
    )


class Evaluator:
    """Values and gradients of several expressions for one channel and one input layout."""

    def __init__(self, ch: CicChannel, in_names: Sequence[str], exprs: Sequence[Expr]):
        self.in_names = tuple(in_names)
        self.names = self.in_names + OUTPUTS
        k = len(self.in_names) - 2
        self.in_ndim = len(self.in_names)
        self.W = ch.p.reshape((1,) * k + ch.p.shape)
        self.exprs = tuple(tuple(e) for e in exprs)
        subsets: dict[frozenset, int] = {}
        # coefficient matrix: expressions x entropy subsets
        rows = []
        for e in self.exprs:
            row: dict[int, float] = {}
            for t in e:
                A, B, C = frozenset(t.a), frozenset(t.b), frozenset(t.c)
                for s, sign in ((A | C, 1.0), (B | C, 1.0), (A | B | C, -1.0), (C, -1.0)):
                    if not s:
                        continue
                    unknown = s - set(self.names)
                    if unknown:
                        raise KeyError(f"unknown variables {sorted(unknown)}")
                    j = subsets.setdefault(s, len(subsets))
                    row[j] = row.get(j, 0.0) + sign * t.coef
            rows.append(row)
        self.subsets = list(subsets)
        self.coef = np.zeros((len(self.exprs), len(self.subsets)))
        for i, row in enumerate(rows):
            for j, c in row.items():
                self.coef[i, j] = c
        self._has_y = [any(y in s for y in OUTPUTS) for s in self.subsets]
        # each marginal is summed from the smallest superset computed before it
        full = frozenset(self.names)
        order = sorted(range(len(self.subsets)), key=lambda j: -len(self.subsets[j]))
        self._plan = []
        done: list[int] = []
        for j in order:
            s = self.subsets[j]
            parents = [i for i in done if s < self.subsets[i]]
            parent = min(parents, key=lambda i: len(self.subsets[i])) if parents else -1
            have = self.subsets[parent] if parent >= 0 else full
            axes = tuple(i for i, n in enumerate(self.names) if n in have and n not in s)
            self._plan.append((j, parent, axes))
            done.append(j)

    def _marginals(self, p: np.ndarray):
        P = p.reshape(p.shape + (1, 1)) * self.W
        marg: list = [None] * len(self.subsets)
        logs: list = [None] * len(self.subsets)
        H = np.empty(len(self.subsets))
        for j, parent, ax in self._plan:
            src = P if parent < 0 else marg[parent]
            m = src.sum(axis=ax, keepdims=True) if ax else src
            lm = np.log2(np.maximum(m, _LOG_FLOOR))
            H[j] = -float(np.vdot(m, lm))
            marg[j], logs[j] = m, lm
        return H, logs

    def values(self, p: np.ndarray) -> np.ndarray:
        H, _ = self._marginals(p)
        return self.coef @ H

    def values_and_grad(self, p: np.ndarray, weights: Callable[[np.ndarray], tuple[float, np.ndarray]]):
        """Objective ``F`` with gradient, where ``weights(vals)`` returns ``F`` and ``dF/dvals``."""
        H, lms = self._marginals(p)
        vals = self.coef @ H
        F, dvals = weights(vals)
        w = dvals @ self.coef
        g_in = np.zeros(p.shape)
        g_y = None
        for j, lm in enumerate(lms):
            if w[j] == 0.0:
                continue
            if self._has_y[j]:
                g_y = -w[j] * lm if g_y is None else g_y - w[j] * lm
            else:
                g_in = g_in - w[j] * lm.reshape(lm.shape[: self.in_ndim])
        if g_y is not None:
            g_in = g_in + (g_y * self.W).sum(axis=(-2, -1))
        return F, vals, g_in


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a flat or shaped array onto the probability simplex."""
    shape = v.shape
    x = v.ravel()
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(x - theta, 0.0).reshape(shape)


# -- distribution families -------------------------------------------------


class Family:
    """Parametrization of a set of input distributions as a list of simplex blocks."""

    names: tuple[str, ...]
    shape: tuple[int, ...]
    factorization = "unconstrained"

    def assemble(self, blocks: list[np.ndarray]) -> np.ndarray:
        return blocks[0]

    def pullback(self, blocks: list[np.ndarray], g: np.ndarray) -> list[np.ndarray]:
        return [g]

    def random(self, rng: np.random.Generator, alpha: float) -> list[np.ndarray]:
        n = int(np.prod(self.shape))
        return [rng.dirichlet(np.full(n, alpha)).reshape(self.shape)]

    def structured(self) -> list[list[np.ndarray]]:
        return []

    def aux_input(self, joint: np.ndarray) -> AuxInput:
        joint = joint / joint.sum()
        return AuxInput.from_array(joint, self.names[:-2], self.factorization)


def _embed(aux_of: Callable[[int, int], int | tuple[int, ...]], aux_shape, p_x: np.ndarray) -> np.ndarray:
    nx1, nx2 = p_x.shape
    out = np.zeros(tuple(aux_shape) + (nx1, nx2))
    for a in range(nx1):
        for b in range(nx2):
            idx = aux_of(a, b)
            idx = idx if isinstance(idx, tuple) else (idx,)
            out[idx + (a, b)] += p_x[a, b]
    return out


class JointFamily(Family):
    """Unconstrained ``p(aux..., x1, x2)``; auxiliary alphabets given by ``aux_sizes``."""

    def __init__(self, names: Sequence[str], aux_sizes: Sequence[int], nx1: int, nx2: int):
        self.names = tuple(names)
        self.aux_sizes = tuple(aux_sizes)
        self.nx = (nx1, nx2)
        self.shape = self.aux_sizes + (nx1, nx2)
        if len(self.aux_sizes) == 2:
            self.factorization = "uv"

    def _maps(self) -> list[Callable[[int, int], int]]:
        nx1, nx2 = self.nx
        maps = [lambda a, b: 0]
        for f, need in (
            (lambda a, b: a, nx1),
            (lambda a, b: a * nx2 + b, nx1 * nx2),
            (lambda a, b: b, nx2),
        ):
            maps.append(f if need > 1 else None)
        return maps

    def embedded(self, p_x: np.ndarray) -> list[np.ndarray]:
        """Structured joints over ``p_x``: auxiliaries constant, ``x1``, ``(x1,x2)`` or ``x2``."""
        nx1, nx2 = self.nx
        maps = self._maps()
        fits = lambda f, k: f is not None and (  # noqa: E731
            max(f(a, b) for a in range(nx1) for b in range(nx2)) < k
        )
        out = []
        if not self.aux_sizes:
            return [p_x.copy()]
        if len(self.aux_sizes) == 1:
            for f in maps:
                if fits(f, self.aux_sizes[0]):
                    out.append(_embed(f, self.aux_sizes, p_x))
            return out
        ku, kv = self.aux_sizes
        pairs = [(1, 2), (0, 2), (2, 3), (1, 3), (2, 2), (0, 0)]
        for iu, iv in pairs:
            fu, fv = maps[iu], maps[iv]
            if fits(fu, ku) and fits(fv, kv):
                out.append(_embed(lambda a, b, fu=fu, fv=fv: (fu(a, b), fv(a, b)), self.aux_sizes, p_x))
        return out

    def structured(self) -> list[list[np.ndarray]]:
        u = np.full(self.nx, 1.0 / (self.nx[0] * self.nx[1]))
        return [[j] for j in self.embedded(u)]


class ProductFamily(Family):
    """``p(x1) p(w, x2)``."""

    factorization = "product"

    def __init__(self, nw: int, nx1: int, nx2: int):
        self.names = ("w", "x1", "x2")
        self.nw, self.nx = nw, (nx1, nx2)
        self.shape = (nw, nx1, nx2)

    def assemble(self, blocks):
        px1, pwx2 = blocks
        return pwx2[:, None, :] * px1[None, :, None]

    def pullback(self, blocks, g):
        px1, pwx2 = blocks
        return [np.einsum("wab,wb->a", g, pwx2), np.einsum("wab,a->wb", g, px1)]

    def random(self, rng, alpha):
        nx1, nx2 = self.nx
        return [rng.dirichlet(np.full(nx1, alpha)), rng.dirichlet(np.full(self.nw * nx2, alpha)).reshape(self.nw, nx2)]

    def from_marginals(self, px1: np.ndarray, px2: np.ndarray) -> list[list[np.ndarray]]:
        nx2 = self.nx[1]
        out = []
        const = np.zeros((self.nw, nx2))
        const[0] = px2
        out.append([px1.copy(), const])
        if self.nw >= nx2 and nx2 > 1:
            out.append([px1.copy(), np.diag(px2) if self.nw == nx2 else np.vstack([np.diag(px2), np.zeros((self.nw - nx2, nx2))])])
        return out

    def structured(self):
        nx1, nx2 = self.nx
        return self.from_marginals(np.full(nx1, 1.0 / nx1), np.full(nx2, 1.0 / nx2))


# -- ascent ----------------------------------------------------------------


@dataclass
class AscentResult:
    blocks: list[np.ndarray]
    value: float
    vals: np.ndarray
    iterations: int
    evaluations: int
    converged: bool


@dataclass
class Objective:
    """Scalar objective: ``weights`` maps expression values to ``(F, dF/dvals)``."""

    evaluator: Evaluator
    family: Family
    weights: Callable[[np.ndarray], tuple[float, np.ndarray]]
    evaluations: int = field(default=0)

    def value(self, blocks) -> tuple[float, np.ndarray]:
        self.evaluations += 1
        vals = self.evaluator.values(self.family.assemble(blocks))
        return self.weights(vals)[0], vals

    def value_and_grad(self, blocks):
        self.evaluations += 1
        joint = self.family.assemble(blocks)
        F, vals, g = self.evaluator.values_and_grad(joint, self.weights)
        return F, vals, self.family.pullback(blocks, g)


def ascend(obj: Objective, blocks: list[np.ndarray], max_iters: int, step_tol: float) -> AscentResult:
    """Projected gradient ascent with step doubling on success and halving on failure.

    Stops when an accepted step gains less than ``step_tol`` bits, when no step
    larger than ``1e-12`` improves the objective, or after ``max_iters``.
    """
    blocks = [np.array(b, dtype=float) for b in blocks]
    start = obj.evaluations
    F, vals, grads = obj.value_and_grad(blocks)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        accepted = False
        while step >= 1e-12:
            cand = [project_simplex(b + step * g) for b, g in zip(blocks, grads)]
            Fc, _ = obj.value(cand)
            if Fc > F:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        gain = Fc - F
        blocks = cand
        F, vals, grads = obj.value_and_grad(blocks)
        step = min(step * 2.0, 1e6)
        if gain < step_tol:
            converged = True
            break
    return AscentResult(blocks, F, vals, it, obj.evaluations - start, converged)


def task_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for task ``key`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(key)))


def simplex_grid(n: int, step: float) -> np.ndarray:
    """All points of the ``n``-letter simplex with coordinates on a ``step`` lattice."""
    k = int(round(1.0 / step))
    pts = []

    def rec(prefix, left, slots):
        if slots == 1:
            pts.append(prefix + [left])
            return
        for i in range(left + 1):
            rec(prefix + [i], left - i, slots - 1)

    rec([], k, n)
    return np.array(pts, dtype=float) / k


def direct_values(ch: CicChannel, inp: AuxInput, exprs: Sequence[Expr]) -> list[float]:
    joint = push_forward(ch, inp)
    return [evaluate_direct(joint, e) for e in exprs]
