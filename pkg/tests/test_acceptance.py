"""Exit criteria. Each test prints one PASS/FAIL line; tolerances are pinned below."""

import functools
import time

import numpy as np
import pytest

from cogcic.bounds import (
    SearchBudget,
    capacity_cln_thm4,
    inner_region_thm2,
    outer_region_thm1,
    region_c1,
    region_c2,
    region_c3,
    representation_region1,
    strong_interference_reexpression,
    sum_rate_redundancy,
)
from cogcic.channel import CATALOG, AuxInput, fixture, random_channel, random_degraded_cognitive
from cogcic.cli import main
from cogcic.coding import CodeSpec, estimate_errors
from cogcic.conditions import (
    BETTER_COGNITIVE,
    COGNITIVE_LESS_NOISY,
    PRIMARY_LESS_NOISY,
    STRONG_INTERFERENCE,
    WEAK_INTERFERENCE,
    Status,
    check_all,
    check_cognitive_less_noisy,
    check_strong_interference,
    lemma1_harness,
)
from cogcic.prob import ProbTensor, compose, conditional_mutual_information
from cogcic.regions import equal, gap, subset
from oracles import grid_region

pytestmark = pytest.mark.acceptance

# pinned tolerances
ORACLE_GAP = 0.01
ORACLE_STEP = 0.05
ORACLE_AUX = 4
RUNTIME_BROADCAST = 300.0
SANDWICH_SUBSET = 5e-3
SANDWICH_EQUAL = 1e-2
POINTWISE_TOL = 1e-9
SAMPLES = 10_000
REPRESENTATION_EQUAL = 1e-2
C2_SUBSET = 1e-3
C3_EQUAL = 1e-2
C1_EQUAL = 1e-2
SIM_INSIDE_MAX = 0.05
SIM_OUTSIDE_MIN = 0.3
SIM_TRIALS = 2000
RUNTIME_SIM = 120.0
WITNESS_MIN = 1e-6

N_DEGRADED = 20
N_RANDOM = 10
BUDGET = SearchBudget()


@functools.cache
def degraded_suite():
    return [random_degraded_cognitive(np.random.default_rng([7, i])) for i in range(N_DEGRADED)]


@functools.cache
def random_suite():
    return [random_channel(np.random.default_rng([11, i]), name=f"random-{i}") for i in range(N_RANDOM)]


def test_criterion_1_degraded_broadcast_reduction(criterion):
    ch = fixture("broadcast-bsc-0.05-0.2")
    t0 = time.perf_counter()
    got = capacity_cln_thm4(ch, BUDGET).region
    ref = grid_region(ch, "thm4", ORACLE_AUX, ORACLE_STEP)
    elapsed = time.perf_counter() - t0
    g1, g2 = gap(got, ref), gap(ref, got)
    ok = g1 <= ORACLE_GAP and g2 <= ORACLE_GAP and elapsed <= RUNTIME_BROADCAST
    criterion("criterion 1 (broadcast reduction vs grid oracle)", ok, f"gap {g1:.2e}/{g2:.2e} bits, {elapsed:.1f}s")


def test_criterion_2_sandwich(criterion):
    bad = []
    worst_sub = worst_eq = 0.0
    for i, ch in enumerate(degraded_suite()):
        thm2 = inner_region_thm2(ch, BUDGET).region
        thm1 = outer_region_thm1(ch, BUDGET).region
        thm4 = capacity_cln_thm4(ch, BUDGET, precheck=False).region
        s, e = gap(thm2, thm1), max(gap(thm2, thm4), gap(thm4, thm2))
        worst_sub, worst_eq = max(worst_sub, s), max(worst_eq, e)
        if not (subset(thm2, thm1, SANDWICH_SUBSET) and equal(thm2, thm4, SANDWICH_EQUAL)):
            bad.append(i)
    criterion(
        "criterion 2 (sandwich on degraded channels)",
        not bad,
        f"{N_DEGRADED - len(bad)}/{N_DEGRADED} channels; worst thm2->thm1 gap {worst_sub:.2e}, thm2<->thm4 {worst_eq:.2e}; failing {bad}",
    )


def test_criterion_3_pointwise_redundancy(criterion):
    reps = [sum_rate_redundancy(ch, SAMPLES, seed=i, tol=POINTWISE_TOL) for i, ch in enumerate(degraded_suite())]
    violations = sum(r.violations for r in reps)
    applicable = sum(r.applicable for r in reps)
    worst = max(r.max_excess for r in reps)
    criterion(
        "criterion 3 (pointwise redundancy identity)",
        violations == 0,
        f"{violations} violations in {applicable} applicable samples; max excess {worst:.2e}",
    )


def test_criterion_4_representation_equivalence(criterion):
    gaps = []
    for ch in random_suite():
        a = representation_region1(ch, BUDGET).region
        b = capacity_cln_thm4(ch, BUDGET, precheck=False).region
        gaps.append(max(gap(a, b), gap(b, a)))
    ok = sum(g <= REPRESENTATION_EQUAL for g in gaps)
    criterion(
        "criterion 4 (sum-rate representation equals thm4)",
        ok == len(gaps),
        f"{ok}/{len(gaps)} channels within {REPRESENTATION_EQUAL}; largest gap {max(gaps):.3f} bits",
    )


def test_criterion_5_conditional_ordering_harness(criterion):
    certified = list(degraded_suite())
    for name in CATALOG:
        ch = fixture(name)
        if check_cognitive_less_noisy(ch).holds:
            certified.append(ch)
    reps = [lemma1_harness(ch, SAMPLES, seed=i) for i, ch in enumerate(certified)]
    violations = sum(r.violations for r in reps)
    criterion(
        "criterion 5 (conditional less-noisy harness)",
        violations == 0,
        f"{violations} violations over {len(reps)} channels x {SAMPLES} samples; max slack {max(r.max_slack for r in reps):.2e}",
    )


def test_criterion_6a_capacity_inside_weak_region(criterion):
    names, bad = [], []
    for name in CATALOG:
        ch = fixture(name)
        if not check_cognitive_less_noisy(ch).holds:
            continue
        names.append(name)
        if not subset(capacity_cln_thm4(ch, BUDGET, precheck=False).region, region_c2(ch, BUDGET).region, C2_SUBSET):
            bad.append(name)
    criterion("criterion 6a (thm4 inside c2)", not bad, f"{len(names) - len(bad)}/{len(names)} fixtures; failing {bad}")


def test_criterion_6b_cognitive_decoding_equals_weak_region(criterion):
    gaps = []
    for ch in random_suite():
        a, b = region_c3(ch, BUDGET).region, region_c2(ch, BUDGET).region
        gaps.append(max(gap(a, b), gap(b, a)))
    ok = sum(g <= C3_EQUAL for g in gaps)
    criterion(
        "criterion 6b (c3 equals c2)",
        ok == len(gaps),
        f"{ok}/{len(gaps)} channels within {C3_EQUAL}; largest gap {max(gaps):.3f} bits",
    )


def test_criterion_6c_rectangle_equals_strong_sum_form(criterion):
    pool = [fixture(n) for n in CATALOG] + list(random_suite())
    passing = [ch for ch in pool if check_strong_interference(ch).holds]
    gaps = {}
    for ch in passing:
        a, b = strong_interference_reexpression(ch, BUDGET).region, region_c1(ch, BUDGET).region
        gaps[ch.name] = max(gap(a, b), gap(b, a))
    bad = [k for k, g in gaps.items() if g > C1_EQUAL]
    criterion(
        "criterion 6c (rectangle form equals c1 under the strong-interference conditions)",
        bool(passing) and not bad,
        f"{len(passing) - len(bad)}/{len(passing)} channels; failing {bad} (gaps {[round(gaps[k], 3) for k in bad]})",
    )


def test_criterion_7_simulator_separation(criterion):
    ch = fixture("noiseless")
    inp = AuxInput.from_array(np.full((1, 2, 2), 0.25), ("w",))
    t0 = time.perf_counter()
    inside = {n: estimate_errors(ch, inp, CodeSpec(n, 0.8, 0.8), SIM_TRIALS) for n in (6, 10, 14)}
    outside = estimate_errors(ch, inp, CodeSpec(10, 1.2, 1.2), SIM_TRIALS)
    elapsed = time.perf_counter() - t0

    def total(rep):
        (a_lo, a_hi), (b_lo, b_hi) = rep.interval("E1"), rep.interval("E2")
        return rep.p_e1 + rep.p_e2, a_lo + b_lo, a_hi + b_hi

    ns = sorted(inside)
    monotone = all(total(inside[m])[1] <= total(inside[n])[2] for n, m in zip(ns, ns[1:]))
    r10 = inside[10]
    checks = {
        "inside P(E1)": r10.p_e1 < SIM_INSIDE_MAX,
        "inside P(E2)": r10.p_e2 < SIM_INSIDE_MAX,
        "outside P(E2)": outside.p_e2 > SIM_OUTSIDE_MIN,
        "monotone in n": monotone,
        "runtime": elapsed <= RUNTIME_SIM,
    }
    detail = (
        f"(0.8,0.8) n=10 P(E1)={r10.p_e1:.3f} P(E2)={r10.p_e2:.3f}; (1.2,1.2) P(E2)={outside.p_e2:.3f}; "
        f"P(E1)+P(E2) by n {[round(total(inside[n])[0], 3) for n in ns]}; {elapsed:.1f}s; "
        f"failed: {[k for k, v in checks.items() if not v]}"
    )
    criterion("criterion 7 (simulator separation)", all(checks.values()), detail)


CLI_RUNS = [
    ["check", "erasure-0.5", "--format", "obj"],
    ["check", "identity"],
    ["region", "broadcast-bsc-0.05-0.2", "--kind", "thm2,thm1", "--format", "obj"],
    ["region", "y2-noiseless-y1-garbled-0.1", "--kind", "thm4"],
    ["compare", "y2-noiseless-y1-garbled-0.1", "--kind", "thm4,c2"],
    ["simulate", "noiseless", "--n", "6,8", "--rates", "0.5:0.5,0:0", "--trials", "200", "--format", "obj"],
    ["report", "noiseless", "--trials", "100", "--n", "6", "--rates", "0.5:0.5", "--format", "obj"],
]


def test_criterion_8_cli_determinism(criterion, tmp_path):
    bad = []
    for i, argv in enumerate(CLI_RUNS):
        outs = []
        for rep in range(2):
            path = tmp_path / f"{i}-{rep}.out"
            assert main(argv + ["--seed", "3", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            bad.append(argv[0])
    criterion("criterion 8 (CLI determinism)", not bad, f"{len(CLI_RUNS) - len(bad)}/{len(CLI_RUNS)} commands byte-identical; differing {bad}")


INEQUALITIES = {
    q.text(): q
    for q in PRIMARY_LESS_NOISY + COGNITIVE_LESS_NOISY + STRONG_INTERFERENCE + WEAK_INTERFERENCE + BETTER_COGNITIVE
}


def _violation_from_scratch(ch, verdict) -> float:
    """lhs - rhs of the failing inequality, using only prob_core on the witness."""
    ineq = INEQUALITIES[verdict.condition]
    inp = verdict.witness.values
    kernel = np.broadcast_to(ch.p, inp.shape[:-2] + ch.p.shape)
    joint = compose(ProbTensor(inp), ProbTensor(kernel, inp.ndim))
    names = list(verdict.witness.aux_names) + ["x1", "x2", "y1", "y2"]
    ax = lambda vs: [names.index(v) for v in vs]  # noqa: E731

    def value(expr):
        return sum(t.coef * conditional_mutual_information(joint, ax(t.a), ax(t.b), ax(t.c)) for t in expr)

    return value(ineq.lhs) - value(ineq.rhs)


def test_criterion_9_witness_soundness(criterion):
    pool = [fixture(n) for n in CATALOG] + list(random_suite())
    fails, bad, weakest = 0, [], np.inf
    for ch in pool:
        for key, v in check_all(ch).items():
            if v.status is not Status.FAILS:
                continue
            fails += 1
            viol = _violation_from_scratch(ch, v)
            weakest = min(weakest, viol)
            if viol < WITNESS_MIN:
                bad.append(f"{ch.name}:{key}")
    criterion(
        "criterion 9 (witness soundness)",
        fails > 0 and not bad,
        f"{fails - len(bad)}/{fails} failing verdicts reproduce a violation >= {WITNESS_MIN}; weakest {weakest:.3g}; unsound {bad}",
    )
