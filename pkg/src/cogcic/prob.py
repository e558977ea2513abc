"""Finite-alphabet probability arithmetic.

Every quantity is in bits. Tensors are plain ``float64`` numpy arrays wrapped
in :class:`ProbTensor`, whose leading ``n_cond`` axes are conditioned on and
whose remaining axes carry a distribution. A joint distribution is simply a
tensor with ``n_cond == 0``.

Conventions: ``0 log 0 = 0``; zero-probability conditioning slices contribute
nothing to a conditional mutual information.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

NORM_TOL = 1e-9
RENORM_TOL = 1e-6
MI_CLAMP = 1e-12

Axes = int | str | Sequence[int | str]


class ProbabilityError(ValueError):
    """Raised for malformed probability tensors."""


def _axes(ax: Axes | None) -> tuple:
    if ax is None:
        return ()
    if isinstance(ax, (int, np.integer, str)):
        return (ax,)
    return tuple(ax)


@dataclass(frozen=True)
class ProbTensor:
    """Nonnegative tensor normalized over its trailing ``ndim - n_cond`` axes."""

    values: np.ndarray
    n_cond: int = 0
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim == 0 or arr.size == 0:
            raise ProbabilityError("tensor must have at least one axis and no empty alphabets")
        if not 0 <= self.n_cond < arr.ndim:
            raise ProbabilityError(f"n_cond={self.n_cond} incompatible with {arr.ndim} axes")
        if not np.all(np.isfinite(arr)):
            raise ProbabilityError("tensor contains non-finite entries")
        if np.any(arr < 0):
            idx = tuple(int(i) for i in np.argwhere(arr < 0)[0])
            raise ProbabilityError(f"negative entry {arr[idx]!r} at index {idx}")
        dev, worst, total = _worst_slice(arr, self.n_cond)
        if dev > NORM_TOL:
            raise ProbabilityError(f"slice {worst} sums to {total!r}, not 1")
        if self.labels is not None and len(self.labels) != arr.ndim:
            raise ProbabilityError(f"{len(self.labels)} labels for {arr.ndim} axes")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def normalized(cls, values, n_cond: int = 0, labels=None, *, what: str = "tensor") -> "ProbTensor":
        """Build a tensor, renormalizing slices that are off by at most ``RENORM_TOL``.

        Larger deviations raise :class:`ProbabilityError` naming the slice.
        """
        arr = np.array(values, dtype=np.float64)
        if arr.ndim == 0 or arr.size == 0:
            raise ProbabilityError(f"{what}: empty tensor")
        if np.any(arr < 0):
            idx = tuple(int(i) for i in np.argwhere(arr < 0)[0])
            raise ProbabilityError(f"{what}: negative entry at index {idx}")
        dev, worst, total = _worst_slice(arr, n_cond)
        if dev > RENORM_TOL + 1e-12:
            raise ProbabilityError(f"{what}: slice {worst} sums to {total:.12g}, not 1")
        if dev > NORM_TOL:
            log.warning("%s: renormalizing slices off by up to %.3g", what, dev)
            sums = arr.reshape(arr.shape[:n_cond] + (-1,)).sum(axis=-1)
            arr = arr / np.expand_dims(sums, tuple(range(n_cond, arr.ndim)))
        return cls(arr, n_cond, labels)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def axis(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)):
            return int(name)
        if self.labels is None or name not in self.labels:
            raise ProbabilityError(f"unknown axis {name!r}")
        return self.labels.index(name)


def _worst_slice(arr: np.ndarray, n_cond: int) -> tuple[float, tuple[int, ...], float]:
    """Largest normalization error over the slices, its index and the slice total."""
    sums = np.atleast_1d(arr.reshape(arr.shape[:n_cond] + (-1,)).sum(axis=-1))
    dev = np.abs(sums - 1.0)
    flat = int(np.argmax(dev))
    idx = tuple(int(i) for i in np.unravel_index(flat, sums.shape)) if n_cond else ()
    return float(dev.flat[flat]), idx, float(sums.flat[flat])


def as_tensor(dist, n_cond: int = 0) -> ProbTensor:
    return dist if isinstance(dist, ProbTensor) else ProbTensor(dist, n_cond)


def _check_axes(t: ProbTensor, axes: Iterable[int]) -> tuple[int, ...]:
    out = []
    for a in axes:
        a = t.axis(a)
        if not 0 <= a < t.ndim:
            raise ProbabilityError(f"axis {a} out of range for {t.ndim}-axis tensor")
        out.append(a)
    return tuple(out)


def _joint(dist) -> ProbTensor:
    t = as_tensor(dist)
    if t.n_cond:
        raise ProbabilityError("expected a joint distribution (no conditioned axes)")
    return t


def _h(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _marginal_entropy(arr: np.ndarray, keep: tuple[int, ...]) -> float:
    if not keep:
        return 0.0
    drop = tuple(a for a in range(arr.ndim) if a not in keep)
    return _h(arr.sum(axis=drop) if drop else arr)


def entropy(dist, axes: Axes | None = None) -> float:
    """Shannon entropy in bits of the marginal on ``axes`` (all axes by default)."""
    t = _joint(dist)
    keep = tuple(range(t.ndim)) if axes is None else _check_axes(t, _axes(axes))
    return _marginal_entropy(t.values, tuple(sorted(set(keep))))


def _clamp(x: float) -> float:
    if x < -MI_CLAMP:
        raise ArithmeticError(f"mutual information evaluated to {x!r} < 0")
    return max(x, 0.0)


def conditional_mutual_information(joint, a: Axes = 0, b: Axes = 1, c: Axes = 2) -> float:
    """``I(A;B|C)`` for disjoint axis groups of a joint tensor; other axes are summed out."""
    t = _joint(joint)
    A, B, C = (set(_check_axes(t, _axes(x))) for x in (a, b, c))
    if A & B or A & C or B & C:
        raise ProbabilityError("axis groups must be disjoint")
    v = t.values
    h = lambda s: _marginal_entropy(v, tuple(sorted(s)))  # noqa: E731
    return _clamp(h(A | C) + h(B | C) - h(A | B | C) - h(C))


def mutual_information(joint, a: Axes = 0, b: Axes = 1) -> float:
    """``I(A;B)`` in bits; axes outside ``a`` and ``b`` are marginalized out."""
    return conditional_mutual_information(joint, a, b, ())


def marginalize(t, axes: Axes) -> ProbTensor:
    """Sum out ``axes`` of a joint tensor."""
    t = _joint(t)
    drop = _check_axes(t, _axes(axes))
    if len(set(drop)) == t.ndim:
        raise ProbabilityError("cannot marginalize every axis")
    labels = None if t.labels is None else tuple(l for i, l in enumerate(t.labels) if i not in drop)
    return ProbTensor(t.values.sum(axis=drop), 0, labels)


def condition(t, axis: int | str, value: int) -> ProbTensor:
    """Slice a joint tensor at ``axis == value`` and renormalize."""
    t = _joint(t)
    (ax,) = _check_axes(t, (axis,))
    if t.ndim < 2:
        raise ProbabilityError("conditioning needs at least two axes")
    if not 0 <= value < t.shape[ax]:
        raise ProbabilityError(f"value {value} out of range for axis {ax}")
    sl = np.take(t.values, value, axis=ax)
    mass = sl.sum()
    if mass <= 0:
        raise ProbabilityError(f"conditioning event axis {ax} = {value} has probability zero")
    labels = None if t.labels is None else t.labels[:ax] + t.labels[ax + 1 :]
    return ProbTensor(sl / mass, 0, labels)


def compose(input_dist, kernel) -> ProbTensor:
    """Joint of ``input_dist`` (axes ``I``) and a kernel ``p(out | I)`` (axes ``I + O``).

    The kernel's conditioned axes must match the full shape of the input.
    """
    p = _joint(input_dist)
    k = as_tensor(kernel, n_cond=p.ndim)
    if k.n_cond != p.ndim or k.shape[: p.ndim] != p.shape:
        raise ProbabilityError(
            f"kernel conditioned shape {k.shape[:k.n_cond]} does not match input shape {p.shape}"
        )
    extra = k.ndim - p.ndim
    joint = p.values.reshape(p.shape + (1,) * extra) * k.values
    labels = None
    if p.labels is not None and k.labels is not None:
        labels = p.labels + k.labels[p.ndim :]
    return ProbTensor(joint, 0, labels)
