"""Monte Carlo random coding for the cognitive channel.

Two schemes are simulated at finite blocklength:

``superposition``
    Cloud centers ``(w, x1)(m1)`` drawn i.i.d. from ``p(w, x1)`` and, for
    every cloud, satellites ``x2(m1, m2)`` drawn from ``p(x2 | w, x1)``.
    Receiver 1 decodes ``m1``; receiver 2 decodes ``m2`` with ``m1`` as a
    nuisance index.
``independent``
    ``x1(m1)`` drawn from ``p(x1)`` and, for every ``m1``, sequences
    ``(w, x2)(m1, m2)`` drawn from ``p(w, x2)``. Receiver 2 decodes ``m2``;
    receiver 1 decodes ``m1`` with ``m2`` as a nuisance index.

Decoding is exhaustive joint-typicality decoding with robust typicality:
a tuple of sequences is typical when every symbol tuple's empirical
frequency is within ``epsilon * p`` of its probability ``p``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np
from scipy.stats import binomtest

from .channel import AuxInput, ChannelError, CicChannel, push_forward
from .optimize import task_rng

CODEBOOK_CAP = 2**16
BATCH = 100
SCHEMES = ("superposition", "independent")
EVENTS = ("e11", "e12", "e21", "e22", "e23")

# spawn-key tags separating the random streams
_CLOUDS, _SATELLITES, _TRIALS = 0, 1, 2


class CodingError(ValueError):
    """Invalid code parameters or codebook access."""


class DecodingError(Exception):
    """A joint-typicality decoder found no unique candidate."""


class NoTypicalCandidate(DecodingError):
    pass


class AmbiguousCandidates(DecodingError):
    def __init__(self, msg: str, candidates: Sequence[int]):
        super().__init__(msg)
        self.candidates = list(candidates)


def message_count(n: int, rate: float) -> int:
    """``floor(2^(n * rate))`` with a guard against round-off at exact powers of two."""
    return int(math.floor(2.0 ** (n * rate) + 1e-9))


@dataclass(frozen=True)
class CodeSpec:
    n: int
    r1: float
    r2: float
    epsilon: float = 0.2
    seed: int = 0
    scheme: str = "superposition"
    cap: int = CODEBOOK_CAP

    def __post_init__(self):
        if self.n < 1:
            raise CodingError("blocklength must be >= 1")
        if self.r1 < 0 or self.r2 < 0:
            raise CodingError("rates must be >= 0")
        if not self.epsilon > 0:
            raise CodingError("epsilon must be > 0")
        if self.scheme not in SCHEMES:
            raise CodingError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        for name, m in (("M1", self.m1), ("M2", self.m2)):
            if m > self.cap:
                raise CodingError(f"{name} = {m} codewords exceeds the cap of {self.cap}")

    @property
    def m1(self) -> int:
        return message_count(self.n, self.r1)

    @property
    def m2(self) -> int:
        return message_count(self.n, self.r2)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "r1": self.r1,
            "r2": self.r2,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "scheme": self.scheme,
            "M1": self.m1,
            "M2": self.m2,
        }


def _draw(rng: np.random.Generator, pmf: np.ndarray, size) -> tuple[np.ndarray, ...]:
    """I.i.d. draws from a joint ``pmf``, returned as one index array per axis."""
    flat = rng.choice(pmf.size, size=size, p=pmf.ravel())
    return np.unravel_index(flat, pmf.shape)


def _draw_conditional(rng: np.random.Generator, cond: np.ndarray, given: tuple[np.ndarray, ...]) -> np.ndarray:
    """Draw ``z ~ cond[given..., :]`` elementwise by inverse CDF."""
    cdf = np.cumsum(cond, axis=-1)[given]
    u = rng.random(cdf.shape[:-1])
    return np.minimum((u[..., None] >= cdf).sum(axis=-1), cond.shape[-1] - 1)


@dataclass
class Codebook:
    """Random codebook; satellites are drawn lazily per cloud from their own seeded stream."""

    spec: CodeSpec
    inp: AuxInput
    book: int
    cloud_w: np.ndarray | None
    cloud_x1: np.ndarray
    _cache: dict[int, tuple[np.ndarray, np.ndarray | None]] = field(default_factory=dict, repr=False)

    @property
    def scheme(self) -> str:
        return self.spec.scheme

    def satellites(self, m1: int) -> tuple[np.ndarray | None, np.ndarray]:
        """``(w, x2)`` sequences of cloud ``m1``, each ``(M2, n)``; ``w`` is None under superposition."""
        if not 0 <= m1 < self.spec.m1:
            raise CodingError(f"m1 = {m1} out of range [0, {self.spec.m1})")
        if m1 not in self._cache:
            rng = task_rng(self.spec.seed, _SATELLITES, self.book, m1)
            shape = (self.spec.m2, self.spec.n)
            p = self.inp.values
            if self.scheme == "superposition":
                pwx1 = p.sum(axis=2, keepdims=True)
                cond = np.divide(p, pwx1, out=np.full_like(p, 1.0 / p.shape[2]), where=pwx1 > 0)
                given = (np.broadcast_to(self.cloud_w[m1], shape), np.broadcast_to(self.cloud_x1[m1], shape))
                self._cache[m1] = (None, _draw_conditional(rng, cond, given))
            else:
                w, x2 = _draw(rng, p.sum(axis=1), shape)
                self._cache[m1] = (w, x2)
        w, x2 = self._cache[m1]
        return w, x2

    def all_satellites(self) -> tuple[np.ndarray | None, np.ndarray]:
        """Every satellite, stacked ``(M1, M2, n)``."""
        parts = [self.satellites(m) for m in range(self.spec.m1)]
        w = None if parts[0][0] is None else np.stack([a for a, _ in parts])
        return w, np.stack([b for _, b in parts])

    @classmethod
    def from_arrays(cls, spec: CodeSpec, inp: AuxInput, x1, x2, w=None, cloud_w=None) -> "Codebook":
        """Hand-built book: ``x1`` is ``(M1, n)``, ``x2`` (and ``w`` for the independent scheme) ``(M1, M2, n)``."""
        x1, x2 = np.asarray(x1, dtype=np.int64), np.asarray(x2, dtype=np.int64)
        if x1.shape != (spec.m1, spec.n) or x2.shape != (spec.m1, spec.m2, spec.n):
            raise CodingError(f"codebook arrays {x1.shape}, {x2.shape} do not match M1={spec.m1}, M2={spec.m2}, n={spec.n}")
        if spec.scheme == "superposition":
            cw = np.zeros_like(x1) if cloud_w is None else np.asarray(cloud_w, dtype=np.int64)
            cb = cls(spec, inp, -1, cw, x1)
            cb._cache = {m: (None, x2[m]) for m in range(spec.m1)}
        else:
            ww = np.zeros_like(x2) if w is None else np.asarray(w, dtype=np.int64)
            cb = cls(spec, inp, -1, None, x1)
            cb._cache = {m: (ww[m], x2[m]) for m in range(spec.m1)}
        return cb


def _check_input(ch: CicChannel, inp: AuxInput, scheme: str) -> None:
    if len(inp.aux_names) != 1:
        raise CodingError(f"coding needs one auxiliary variable, got {inp.aux_names}")
    if inp.values.shape[1:] != (ch.nx1, ch.nx2):
        raise CodingError(f"input alphabets {inp.values.shape[1:]} do not match channel ({ch.nx1}, {ch.nx2})")
    if scheme == "independent":
        v = inp.values
        prod = v.sum(axis=(0, 2))[None, :, None] * v.sum(axis=1)[:, None, :]
        if np.max(np.abs(prod - v)) > 1e-9:
            raise CodingError("independent scheme needs p(w, x1, x2) = p(x1) p(w, x2)")


def build_codebook(ch: CicChannel, inp: AuxInput, spec: CodeSpec, book: int = 0) -> Codebook:
    """Draw codebook number ``book`` for ``spec``; identical arguments give an identical book."""
    _check_input(ch, inp, spec.scheme)
    rng = task_rng(spec.seed, _CLOUDS, book)
    shape = (spec.m1, spec.n)
    p = inp.values
    if spec.scheme == "superposition":
        w, x1 = _draw(rng, p.sum(axis=2), shape)
        return Codebook(spec, inp, book, w, x1)
    (x1,) = _draw(rng, p.sum(axis=(0, 2)), shape)
    return Codebook(spec, inp, book, None, x1)


def encode(cb: Codebook, m1: int, m2: int) -> tuple[np.ndarray, np.ndarray]:
    """Channel inputs ``(x1^n, x2^n)`` for messages ``(m1, m2)`` (zero-based)."""
    if not 0 <= m2 < cb.spec.m2:
        raise CodingError(f"m2 = {m2} out of range [0, {cb.spec.m2})")
    _, x2 = cb.satellites(m1)
    return cb.cloud_x1[m1].copy(), x2[m2].copy()


def transmit(ch: CicChannel, x1: np.ndarray, x2: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Pass input sequences through the memoryless channel."""
    x1, x2 = np.asarray(x1), np.asarray(x2)
    if x1.shape != x2.shape or x1.ndim != 1:
        raise ChannelError("input sequences must be one-dimensional and of equal length")
    if x1.min(initial=0) < 0 or x1.max(initial=0) >= ch.nx1 or x2.min(initial=0) < 0 or x2.max(initial=0) >= ch.nx2:
        raise ChannelError("input symbols outside the channel alphabets")
    rows = ch.p.reshape(ch.nx1, ch.nx2, -1)
    y = _draw_conditional(rng, rows, (x1, x2))
    return np.unravel_index(y, (ch.ny1, ch.ny2))


# -- typicality ------------------------------------------------------------------


def typical(seqs: Sequence[np.ndarray], pmf: np.ndarray, epsilon: float) -> np.ndarray:
    """Robust typicality of each row of the broadcast sequence stack against ``pmf``.

    ``seqs`` has one integer array per axis of ``pmf``; they broadcast to
    ``(..., n)``. Returns a boolean array of the leading shape.
    """
    arrs = np.broadcast_arrays(*[np.asarray(s) for s in seqs])
    lead, n = arrs[0].shape[:-1], arrs[0].shape[-1]
    k = int(np.prod(lead)) if lead else 1
    code = np.ravel_multi_index(tuple(a.reshape(k, n) for a in arrs), pmf.shape)
    size = pmf.size
    counts = np.bincount((code + size * np.arange(k)[:, None]).ravel(), minlength=k * size).reshape(k, size)
    p = pmf.ravel()
    ok = np.all(np.abs(counts / n - p) <= epsilon * p + 1e-12, axis=1)
    return ok.reshape(lead)


class _Laws:
    """Marginals of ``p(w, x1, x2, y1, y2)`` used by the decoders."""

    def __init__(self, ch: CicChannel, inp: AuxInput):
        j = push_forward(ch, inp).values  # axes w, x1, x2, y1, y2
        self.w_x1_y1 = j.sum(axis=(2, 4))
        self.w_x1_y2 = j.sum(axis=(2, 3))
        self.w_x1_x2_y1 = j.sum(axis=4)
        self.w_x1_x2_y2 = j.sum(axis=3)
        self.x1_y1 = j.sum(axis=(0, 2, 4))
        self.w_x2_y2 = j.sum(axis=(1, 3))


class Decoded(NamedTuple):
    m1: int | None
    m2: int | None


def _typical_pairs(cb: Codebook, laws: _Laws, y: np.ndarray, receiver: int, eps: float) -> list[tuple[int, int]]:
    """All ``(m1, m2)`` whose full codeword tuple is typical with ``y`` at the given receiver.

    Clouds are screened first with a marginal test, which is exact: a typical
    tuple has typical marginals, since marginal deviations are sums of
    per-tuple deviations.
    """
    sp = cb.scheme == "superposition"
    if sp:
        screen_law, full_law = (laws.w_x1_y1, laws.w_x1_x2_y1) if receiver == 1 else (laws.w_x1_y2, laws.w_x1_x2_y2)
        keep = np.nonzero(typical([cb.cloud_w, cb.cloud_x1, y[None, :]], screen_law, eps))[0]
    elif receiver == 1:
        full_law = laws.w_x1_x2_y1
        keep = np.nonzero(typical([cb.cloud_x1, y[None, :]], laws.x1_y1, eps))[0]
    else:
        full_law = laws.w_x2_y2
        keep = np.arange(cb.spec.m1)
    out = []
    for m1 in keep:
        w, x2 = cb.satellites(int(m1))
        if sp:
            ok = typical([cb.cloud_w[m1][None, :], cb.cloud_x1[m1][None, :], x2, y[None, :]], full_law, eps)
        elif receiver == 1:
            ok = typical([w, cb.cloud_x1[m1][None, :], x2, y[None, :]], full_law, eps)
        else:
            ok = typical([w, x2, y[None, :]], full_law, eps)
        out += [(int(m1), int(m2)) for m2 in np.nonzero(ok)[0]]
    return out


def _decide(values: Sequence[int], what: str) -> int:
    cands = sorted(set(values))
    if not cands:
        raise NoTypicalCandidate(f"no typical {what}")
    if len(cands) > 1:
        raise AmbiguousCandidates(f"{len(cands)} typical {what} candidates", cands)
    return cands[0]


def _unique_other(pairs: list[tuple[int, int]], key: int, idx: int) -> int | None:
    others = {p[1 - idx] for p in pairs if p[idx] == key}
    return others.pop() if len(others) == 1 else None


def _decode(cb: Codebook, laws: _Laws, y: np.ndarray, receiver: int, eps: float) -> Decoded:
    own = 0 if receiver == 1 else 1
    if cb.scheme == "superposition" and receiver == 1:
        clouds = np.nonzero(typical([cb.cloud_w, cb.cloud_x1, y[None, :]], laws.w_x1_y1, eps))[0]
        return Decoded(_decide(clouds.tolist(), "m1"), None)
    pairs = _typical_pairs(cb, laws, y, receiver, eps)
    m = _decide([p[own] for p in pairs], f"m{receiver}")
    other = _unique_other(pairs, m, own)
    return Decoded(m, other) if own == 0 else Decoded(other, m)


def decode1(cb: Codebook, ch: CicChannel, y1: np.ndarray, epsilon: float | None = None) -> Decoded:
    """Receiver 1: the unique typical ``m1``. Raises a :class:`DecodingError` otherwise.

    Under the independent scheme the ``m2`` field is filled in when the
    decoded ``m1`` has exactly one typical partner.
    """
    eps = cb.spec.epsilon if epsilon is None else epsilon
    return _decode(cb, _Laws(ch, cb.inp), _check_seq(cb, y1, ch.ny1), 1, eps)


def decode2(cb: Codebook, ch: CicChannel, y2: np.ndarray, epsilon: float | None = None) -> Decoded:
    """Receiver 2: the unique ``m2`` typical with some ``m1``. Raises a :class:`DecodingError` otherwise."""
    eps = cb.spec.epsilon if epsilon is None else epsilon
    return _decode(cb, _Laws(ch, cb.inp), _check_seq(cb, y2, ch.ny2), 2, eps)


def _check_seq(cb: Codebook, y: np.ndarray, ny: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (cb.spec.n,):
        raise CodingError(f"received sequence has shape {y.shape}, expected ({cb.spec.n},)")
    if y.size and (y.min() < 0 or y.max() >= ny):
        raise CodingError("received symbols outside the output alphabet")
    return y


# -- Monte Carlo -------------------------------------------------------------------


@dataclass
class TrialResult:
    sent: tuple[int, int]
    decoded1: Decoded | None
    decoded2: Decoded | None
    e11: bool
    e12: bool
    e21: bool
    e22: bool
    e23: bool

    @property
    def error1(self) -> bool:
        return self.decoded1 is None or self.decoded1.m1 != self.sent[0]

    @property
    def error2(self) -> bool:
        return self.decoded2 is None or self.decoded2.m2 != self.sent[1]


def run_trial(ch: CicChannel, cb: Codebook, laws: _Laws, m1: int, m2: int, rng: np.random.Generator) -> TrialResult:
    x1, x2 = encode(cb, m1, m2)
    y1, y2 = transmit(ch, x1, x2, rng)
    eps = cb.spec.epsilon
    sp = cb.scheme == "superposition"

    # receiver 1
    if sp:
        cands1 = np.nonzero(typical([cb.cloud_w, cb.cloud_x1, y1[None, :]], laws.w_x1_y1, eps))[0].tolist()
        e11 = m1 not in cands1
        e12 = any(c != m1 for c in cands1)
        pairs1 = None
    else:
        pairs1 = _typical_pairs(cb, laws, y1, 1, eps)
        cands1 = [p[0] for p in pairs1]
        e11 = (m1, m2) not in pairs1
        e12 = any(c != m1 for c in cands1)
    try:
        m1_hat = _decide(cands1, "m1")
        d1 = Decoded(m1_hat, None if sp else _unique_other(pairs1, m1_hat, 0))
    except DecodingError:
        d1 = None

    # receiver 2
    pairs2 = _typical_pairs(cb, laws, y2, 2, eps)
    e21 = (m1, m2) not in pairs2
    e22 = any(a == m1 and b != m2 for a, b in pairs2)
    e23 = any(a != m1 and b != m2 for a, b in pairs2)
    try:
        m2_hat = _decide([b for _, b in pairs2], "m2")
        d2 = Decoded(_unique_other(pairs2, m2_hat, 1), m2_hat)
    except DecodingError:
        d2 = None
    return TrialResult((m1, m2), d1, d2, e11, e12, e21, e22, e23)


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class ErrorReport:
    spec: CodeSpec
    trials: int
    books: int
    counts: dict[str, int]

    def rate(self, key: str) -> float:
        return self.counts[key] / self.trials

    def interval(self, key: str) -> tuple[float, float]:
        return wilson_interval(self.counts[key], self.trials)

    @property
    def p_e1(self) -> float:
        return self.rate("E1")

    @property
    def p_e2(self) -> float:
        return self.rate("E2")

    def to_dict(self) -> dict[str, Any]:
        keys = ("E1", "E2") + EVENTS
        return {
            "spec": self.spec.to_dict(),
            "trials": self.trials,
            "codebooks": self.books,
            "counts": {k: self.counts[k] for k in keys},
            "rates": {k: self.rate(k) for k in keys},
            "ci95": {k: list(self.interval(k)) for k in keys},
        }


def estimate_errors(
    ch: CicChannel, inp: AuxInput, spec: CodeSpec, trials: int, batch: int = BATCH
) -> ErrorReport:
    """Empirical error rates over ``trials`` uniformly drawn message pairs.

    A fresh codebook is drawn every ``batch`` trials; trial ``t`` of batch
    ``b`` uses its own stream derived from ``(seed, b, t)``.
    """
    if trials < 1:
        raise CodingError("trials must be >= 1")
    if batch < 1:
        raise CodingError("batch must be >= 1")
    _check_input(ch, inp, spec.scheme)
    laws = _Laws(ch, inp)
    counts = dict.fromkeys(("E1", "E2") + EVENTS, 0)
    books = math.ceil(trials / batch)
    for b in range(books):
        cb = build_codebook(ch, inp, spec, book=b)
        for t in range(min(batch, trials - b * batch)):
            rng = task_rng(spec.seed, _TRIALS, b, t)
            m1, m2 = int(rng.integers(spec.m1)), int(rng.integers(spec.m2))
            res = run_trial(ch, cb, laws, m1, m2, rng)
            counts["E1"] += res.error1
            counts["E2"] += res.error2
            for e in EVENTS:
                counts[e] += getattr(res, e)
    return ErrorReport(spec, trials, books, counts)


SWEEP_HEADER = ("n", "r1", "r2", "P(E1)", "P(E2)")


def sweep(
    ch: CicChannel,
    inp: AuxInput,
    ns: Sequence[int],
    rates: Sequence[tuple[float, float]],
    trials: int,
    epsilon: float = 0.2,
    seed: int = 0,
    scheme: str = "superposition",
) -> list[ErrorReport]:
    return [
        estimate_errors(ch, inp, CodeSpec(n, r1, r2, epsilon, seed, scheme), trials)
        for n in ns
        for r1, r2 in rates
    ]


def sweep_csv(reports: Sequence[ErrorReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in reports:
        w.writerow([r.spec.n, repr(r.spec.r1), repr(r.spec.r2), repr(r.p_e1), repr(r.p_e2)])
    return buf.getvalue()
