import numpy as np
import pytest

from cogcic.channel import AuxInput, ChannelError, deterministic_kernel, fixture, product_channel, random_channel
from cogcic.coding import (
    SWEEP_HEADER,
    AmbiguousCandidates,
    Codebook,
    CodeSpec,
    CodingError,
    NoTypicalCandidate,
    _Laws,
    build_codebook,
    decode1,
    decode2,
    encode,
    estimate_errors,
    message_count,
    run_trial,
    sweep,
    sweep_csv,
    transmit,
    typical,
    wilson_interval,
)
from cogcic.optimize import task_rng

noiseless = fixture("noiseless")
UNIFORM = AuxInput.from_array(np.full((1, 2, 2), 0.25), ("w",))
UNIFORM_PRODUCT = AuxInput.product([0.5, 0.5], [[0.5, 0.5]])

# Every (x1, x2) pair occurs exactly twice in each cloud/satellite combination.
X1 = np.array([[0, 0, 0, 0, 1, 1, 1, 1], [0, 0, 1, 1, 0, 0, 1, 1]])
X2_ROWS = np.array([[0, 1, 0, 1, 0, 1, 0, 1], [0, 1, 1, 0, 0, 1, 1, 0]])
X2 = np.stack([X2_ROWS, X2_ROWS])
BALANCED = CodeSpec(8, 1 / 8, 1 / 8, epsilon=0.25)


def test_message_count_exact_powers():
    assert message_count(10, 0.8) == 256
    assert message_count(8, 0.5) == 16
    assert message_count(3, 0.0) == 1


def test_spec_rejects_bad_values():
    for kw in ({"n": 0}, {"r1": -0.1}, {"epsilon": 0.0}, {"scheme": "ml"}, {"n": 20, "r1": 1.0}):
        with pytest.raises(CodingError):
            CodeSpec(**{"n": 8, "r1": 0.5, "r2": 0.5, **kw})


def test_single_cloud_single_satellite():
    cb = build_codebook(noiseless, UNIFORM, CodeSpec(1, 0, 0))
    assert cb.cloud_x1.shape == (1, 1)
    assert cb.all_satellites()[1].shape == (1, 1, 1)


def test_deterministic_law_gives_identical_sequences():
    p = np.zeros((1, 2, 2))
    p[0, 1, 0] = 1.0
    cb = build_codebook(noiseless, AuxInput.from_array(p, ("w",)), CodeSpec(6, 0.5, 0.5))
    assert np.all(cb.cloud_x1 == 1)
    assert np.all(cb.all_satellites()[1] == 0)


def test_codebook_histogram_within_three_sigma():
    cb = build_codebook(noiseless, UNIFORM, CodeSpec(8, 0.5, 0.5, seed=3))
    _, x2 = cb.all_satellites()
    assert cb.cloud_x1.shape == (16, 8) and x2.shape == (16, 16, 8)
    for seqs in (cb.cloud_x1, x2):
        n = seqs.size
        sigma = np.sqrt(n * 0.25)
        assert abs(np.count_nonzero(seqs == 1) - n / 2) <= 3 * sigma


def test_codebook_regeneration_bit_identical():
    spec = CodeSpec(8, 0.5, 0.5, seed=9)
    a, b = build_codebook(noiseless, UNIFORM, spec, 2), build_codebook(noiseless, UNIFORM, spec, 2)
    np.testing.assert_array_equal(a.cloud_x1, b.cloud_x1)
    np.testing.assert_array_equal(a.all_satellites()[1], b.all_satellites()[1])


def test_independent_scheme_requires_product_input():
    with pytest.raises(CodingError):
        build_codebook(noiseless, AuxInput.from_array(np.array([[[0.5, 0.0], [0.0, 0.5]]]), ("w",)), CodeSpec(4, 0, 0, scheme="independent"))


def test_cap_enforced():
    with pytest.raises(CodingError):
        CodeSpec(8, 2.5, 0, cap=2**16)


def test_encode_lookup_and_bounds():
    cb = Codebook.from_arrays(BALANCED, UNIFORM, X1, X2)
    x1, x2 = encode(cb, 1, 0)
    np.testing.assert_array_equal(x1, X1[1])
    np.testing.assert_array_equal(x2, X2[1, 0])
    with pytest.raises(CodingError):
        encode(cb, 2, 0)
    with pytest.raises(CodingError):
        encode(cb, 0, 2)


def test_reencode_matches_stored_rows():
    cb = build_codebook(noiseless, UNIFORM, CodeSpec(8, 0.5, 0.5, seed=1))
    _, x2 = cb.all_satellites()
    for m1 in range(cb.spec.m1):
        for m2 in range(cb.spec.m2):
            a, b = encode(cb, m1, m2)
            np.testing.assert_array_equal(a, cb.cloud_x1[m1])
            np.testing.assert_array_equal(b, x2[m1, m2])


def test_transmit_deterministic_channel():
    rng = np.random.default_rng(0)
    x1, x2 = rng.integers(2, size=20), rng.integers(2, size=20)
    y1, y2 = transmit(noiseless, x1, x2, rng)
    np.testing.assert_array_equal(y1, x1)
    np.testing.assert_array_equal(y2, 2 * x1 + x2)


def test_transmit_empirical_law_within_three_sigma():
    ch = random_channel(np.random.default_rng(2), 2, 2, 2, 3)
    n = 10_000
    y1, y2 = transmit(ch, np.zeros(n, int), np.zeros(n, int), np.random.default_rng(5))
    counts = np.zeros((2, 3))
    np.add.at(counts, (y1, y2), 1)
    p = ch.p[0, 0]
    assert np.all(np.abs(counts - n * p) <= 3 * np.sqrt(n * p * (1 - p)))


def test_transmit_seeded_repeatable():
    x = np.array([0, 1, 1, 0, 1])
    ch = fixture("symmetric")
    a = transmit(ch, x, x, np.random.default_rng(8))
    b = transmit(ch, x, x, np.random.default_rng(8))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_transmit_rejects_alphabet_mismatch():
    with pytest.raises(ChannelError):
        transmit(noiseless, np.array([0, 2]), np.array([0, 1]), np.random.default_rng(0))


def test_typicality_rule():
    pmf = np.array([0.5, 0.5, 0.0])
    assert typical([np.array([[0, 1, 0, 1]])], pmf, 0.1)[0]
    assert not typical([np.array([[0, 0, 0, 1]])], pmf, 0.1)[0]
    assert not typical([np.array([[0, 1, 2, 1]])], pmf, 10.0)[0]


@pytest.mark.parametrize("m1", range(2))
@pytest.mark.parametrize("m2", range(2))
def test_noiseless_distinct_codewords_decode(m1, m2):
    cb = Codebook.from_arrays(BALANCED, UNIFORM, X1, X2)
    y1, y2 = transmit(noiseless, *encode(cb, m1, m2), np.random.default_rng(0))
    assert decode1(cb, noiseless, y1).m1 == m1
    assert decode2(cb, noiseless, y2) == (m1, m2)


def test_zero_probability_symbol_means_no_candidate():
    k1 = deterministic_kernel(lambda a, b: a, 2, 2, 3)  # symbol 2 is never emitted
    k2 = deterministic_kernel(lambda a, b: 2 * a + b, 2, 2, 4)
    ch = product_channel(k1, k2)
    cb = Codebook.from_arrays(BALANCED, UNIFORM, X1, X2)
    y1 = X1[0].copy()
    y1[3] = 2
    with pytest.raises(NoTypicalCandidate):
        decode1(cb, ch, y1)


def test_duplicate_codewords_are_ambiguous():
    cb = Codebook.from_arrays(BALANCED, UNIFORM, np.stack([X1[0], X1[0]]), X2)
    with pytest.raises(AmbiguousCandidates) as exc:
        decode1(cb, noiseless, X1[0])
    assert exc.value.candidates == [0, 1]


def test_independent_scheme_decoder1_decodes_both_when_y2_constant():
    ch = fixture("y2-const")
    spec = CodeSpec(8, 1 / 8, 1 / 8, epsilon=0.25, scheme="independent")
    cb = Codebook.from_arrays(spec, UNIFORM_PRODUCT, X1, X2)
    for m1 in range(2):
        for m2 in range(2):
            y1, y2 = transmit(ch, *encode(cb, m1, m2), np.random.default_rng(0))
            assert decode1(cb, ch, y1) == (m1, m2)
            with pytest.raises(AmbiguousCandidates):
                decode2(cb, ch, y2)


def test_zero_rates_zero_errors():
    rep = estimate_errors(noiseless, UNIFORM, CodeSpec(10, 0, 0, epsilon=4.0), trials=200)
    assert rep.counts["E1"] == 0 and rep.counts["E2"] == 0


def test_estimates_deterministic():
    spec = CodeSpec(8, 0.5, 0.5, seed=4)
    a = estimate_errors(noiseless, UNIFORM, spec, trials=150).to_dict()
    b = estimate_errors(noiseless, UNIFORM, spec, trials=150).to_dict()
    assert a == b and a["codebooks"] == 2


def test_event_accounting():
    spec = CodeSpec(8, 0.6, 0.6, seed=2)
    cb = build_codebook(noiseless, UNIFORM, spec)
    laws = _Laws(noiseless, UNIFORM)
    for t in range(100):
        rng = task_rng(0, t)
        r = run_trial(noiseless, cb, laws, int(rng.integers(spec.m1)), int(rng.integers(spec.m2)), rng)
        if r.error1:
            assert r.e11 or r.e12
        if r.error2:
            assert r.e21 or r.e22 or r.e23
    rep = estimate_errors(noiseless, UNIFORM, spec, trials=200)
    assert rep.rate("E2") <= rep.rate("e21") + rep.rate("e22") + rep.rate("e23")
    assert rep.rate("E1") <= rep.rate("e11") + rep.rate("e12")


def test_wilson_interval_brackets_rate():
    lo, hi = wilson_interval(5, 100)
    assert lo < 0.05 < hi
    assert wilson_interval(0, 50)[0] == 0.0


def test_sweep_csv_rows():
    reps = sweep(noiseless, UNIFORM, [4, 6], [(0.0, 0.0)], trials=20, epsilon=4.0)
    lines = sweep_csv(reps).splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert lines[1:] == ["4,0.0,0.0,0.0,0.0", "6,0.0,0.0,0.0,0.0"]
