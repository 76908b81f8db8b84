import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asympolar.construction import construct_code
from asympolar.core import CodeError, CodeScheme, CodeSpec
from asympolar.crc import crc16_batch
from asympolar.decoder import (f_op, fast_ssc_decode, g_op, h3, hd, sc_decode, scl_decode,
                               scl_decode_batch, ternary_branch_ops)
from asympolar.encoder import encode, generator_matrix
from asympolar.schedule import classify, compile_schedule, schedule_for, structure_for


def random_spec(rng, scheme, n_total, k):
    n = scheme.native_length(n_total)
    forced = set(scheme.pattern)
    free = [i for i in range(n) if i not in forced]
    info = tuple(int(i) for i in rng.permutation(free)[:k])
    return CodeSpec(n_total, k, scheme, info, tuple(sorted(set(range(n)) - set(info))))


SCHEMES = [
    (CodeScheme.arikan(), 16),
    (CodeScheme.asymmetric(True), 13),
    (CodeScheme.asymmetric(False), 13),
    (CodeScheme.asymmetric(True), 45),
    (CodeScheme.shortened(range(11, 16)), 11),
    (CodeScheme.punctured((0, 4, 8, 12, 2)), 11),
    (CodeScheme.multikernel((3, 2, 2)), 12),
    (CodeScheme.multikernel((2, 3, 3)), 18),
]


def test_primitives():
    assert f_op(3.0, -2.0) == -2.0
    assert f_op(-3.0, -2.0) == 2.0
    assert g_op(3.0, 1.0, 0) == 4.0
    assert g_op(3.0, 1.0, 1) == -2.0
    assert hd(0.5) == 0 and hd(-0.5) == 1
    assert hd(0.0) == 1
    assert hd(-4.0, index=2, frozen_set={2}) == 0


def test_ternary_ops():
    a, b, c = 2.0, -3.0, 5.0
    left, center, right = ternary_branch_ops(a, b, c, 1, 0)
    assert left == f_op(f_op(a, b), c)
    assert center == -a + f_op(b, c)
    assert right == -b - c
    _, _, right = ternary_branch_ops(a, b, c, 1, 1)
    assert right == -b + c
    out = h3(np.array([1]), np.array([0]), np.array([1]))
    assert out.tolist() == [1, 0, 0]


def _reference_n6(y, frozen):
    """Straight-line SC for the ascending N=6 code (top G2 at 0..1, bottom G4 at 2..5)."""
    u = [0] * 6

    def dec(i, llr):
        u[i] = 0 if i in frozen else int(llr <= 0)
        return u[i]

    t0, t1 = f_op(y[0], y[2]), f_op(y[1], y[3])
    dec(0, f_op(t0, t1))
    dec(1, g_op(t0, t1, u[0]))
    c0, c1 = u[0] ^ u[1], u[1]
    b = [g_op(y[0], y[2], c0), g_op(y[1], y[3], c1), y[4], y[5]]
    a0, a1 = f_op(b[0], b[2]), f_op(b[1], b[3])
    dec(2, f_op(a0, a1))
    dec(3, g_op(a0, a1, u[2]))
    d0, d1 = g_op(b[0], b[2], u[2] ^ u[3]), g_op(b[1], b[3], u[3])
    dec(4, f_op(d0, d1))
    dec(5, g_op(d0, d1, u[4]))
    return u


def test_sc_matches_straight_line_n6():
    rng = np.random.default_rng(4)
    for _ in range(300):
        spec = random_spec(rng, CodeScheme.asymmetric(True), 6, int(rng.integers(0, 7)))
        y = rng.normal(0.5, 1.5, size=6)
        u_hat, _ = sc_decode(y, spec)
        assert u_hat.tolist() == _reference_n6(y, set(spec.frozen_set))


def _ml(llrs, spec):
    g = generator_matrix(spec).astype(np.int64)
    info = sorted(spec.info_set)
    best, best_score = None, -np.inf
    for bits in itertools.product((0, 1), repeat=len(info)):
        u = np.zeros(spec.n_native, dtype=np.int64)
        u[info] = bits
        x = (u @ g) & 1
        score = float(np.sum((1 - 2 * x) * llrs))
        if score > best_score:
            best, best_score = u, score
    return best


def test_ternary_ml_n3():
    rng = np.random.default_rng(5)
    for k in (1, 2, 3):
        spec = random_spec(rng, CodeScheme.multikernel((3,)), 3, k)
        for _ in range(200):
            y = rng.normal(0.3, 1.2, size=3)
            assert scl_decode(y, spec, list_size=8).tolist() == _ml(y, spec).tolist()


@pytest.mark.parametrize("scheme,n", [(CodeScheme.arikan(), 8), (CodeScheme.asymmetric(True), 7),
                                      (CodeScheme.asymmetric(False), 6), (CodeScheme.multikernel((2, 3)), 6)])
def test_scl_full_list_is_ml(scheme, n):
    rng = np.random.default_rng(6)
    spec = random_spec(rng, scheme, n, 4)
    y = rng.normal(0.4, 1.3, size=(300, n))
    u_hat = scl_decode(y, spec, list_size=16)
    for row, llr in zip(u_hat, y):
        assert row.tolist() == _ml(llr, spec).tolist()


@pytest.mark.parametrize("scheme,n", SCHEMES)
def test_noiseless_roundtrip_all_decoders(scheme, n):
    rng = np.random.default_rng(7)
    spec = random_spec(rng, scheme, n, max(1, (n - len(scheme.pattern)) // 2))
    u = np.zeros((64, spec.n_native), dtype=np.uint8)
    u[:, list(spec.info_set)] = rng.integers(0, 2, size=(64, spec.k_info))
    x = encode(u, spec)
    llr = 8.0 * (1 - 2.0 * x)
    if scheme.is_rate_matched:
        llr[:, list(scheme.pattern)] = 300.0 if scheme.kind == "shortened" else 0.0
    for decoded in (sc_decode(llr, spec)[0], fast_ssc_decode(llr, spec)[0], scl_decode(llr, spec, list_size=4)):
        assert np.array_equal(decoded, u)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SCHEMES), st.integers(0, 2**32 - 1), st.booleans())
def test_fast_ssc_matches_sc(case, seed, integer_llrs):
    scheme, n = case
    rng = np.random.default_rng(seed)
    n_free = scheme.native_length(n) - len(scheme.pattern)
    spec = random_spec(rng, scheme, n, int(rng.integers(0, n_free + 1)))
    if integer_llrs:
        # small integers force exact ties and zeros
        llr = rng.integers(-2, 3, size=(50, spec.n_native)).astype(float)
    else:
        llr = rng.normal(0.5, 2.0, size=(50, spec.n_native))
    u_sc, x_sc = sc_decode(llr, spec)
    u_fast, x_fast = fast_ssc_decode(llr, spec)
    assert np.array_equal(u_sc, u_fast)
    assert np.array_equal(x_sc, x_fast)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SCHEMES), st.integers(0, 2**32 - 1))
def test_scl_list_one_is_sc(case, seed):
    scheme, n = case
    rng = np.random.default_rng(seed)
    n_free = scheme.native_length(n) - len(scheme.pattern)
    spec = random_spec(rng, scheme, n, int(rng.integers(0, n_free + 1)))
    llr = rng.normal(0.3, 2.0, size=(40, spec.n_native))
    assert np.array_equal(scl_decode(llr, spec, list_size=1), sc_decode(llr, spec)[0])


def test_forced_equal_halves_decode_like_arikan():
    rng = np.random.default_rng(8)
    for k in (1, 2, 3, 4):
        n = 2 ** (k + 1)
        apc = random_spec(rng, CodeScheme.asymmetric(True, (n // 2, n // 2)), n, n // 2)
        ari = CodeSpec(n, n // 2, CodeScheme.arikan(), apc.info_set, apc.frozen_set)
        llr = rng.normal(0.5, 1.5, size=(200, n))
        assert np.array_equal(sc_decode(llr, apc)[0], sc_decode(llr, ari)[0])
        assert np.array_equal(scl_decode(llr, apc, list_size=4), scl_decode(llr, ari, list_size=4))


def test_crc_aided_selection_prefers_passing_paths():
    spec = construct_code("apc", 64, 40, 1.0, crc_width=16)
    rng = np.random.default_rng(9)
    payload_pos, crc_pos = spec.info_positions()
    u = np.zeros((300, 64), dtype=np.uint8)
    u[:, payload_pos] = rng.integers(0, 2, size=(300, payload_pos.size))
    u[:, crc_pos] = crc16_batch(u[:, payload_pos])
    x = encode(u, spec)
    llr = 2 * (1 - 2.0 * x + rng.normal(0, 1.0, size=x.shape))
    result = scl_decode_batch(llr, spec, list_size=8)
    passes = np.all(crc16_batch(result.paths[:, :, payload_pos]) == result.paths[:, :, crc_pos], axis=2)
    assert np.array_equal(result.crc_pass, passes.any(axis=1))
    chosen_ok = np.all(crc16_batch(result.u_hat[:, payload_pos]) == result.u_hat[:, crc_pos], axis=1)
    assert np.array_equal(chosen_ok[passes.any(axis=1)], np.ones(passes.any(axis=1).sum(), dtype=bool))
    # the chosen path has the best metric among passing paths
    for row in np.nonzero(passes.any(axis=1))[0]:
        best = np.min(result.path_metrics[row][passes[row]])
        chosen = np.nonzero((result.paths[row] == result.u_hat[row]).all(axis=1))[0]
        assert np.isclose(result.path_metrics[row][chosen].min(), best)
    sc_err = np.any(sc_decode(llr, spec)[0][:, payload_pos] != u[:, payload_pos], axis=1).sum()
    scl_err = np.any(result.u_hat[:, payload_pos] != u[:, payload_pos], axis=1).sum()
    assert scl_err <= sc_err


def test_classify_patterns():
    t, f = True, False
    assert classify(np.array([t, t, t, t])) == "rate0"
    assert classify(np.array([f, f, f, f])) == "rate1"
    assert classify(np.array([t, t, t, f])) == "repetition"
    assert classify(np.array([t, f, f, f])) == "spc"
    assert classify(np.array([t, f, t, f])) is None


def test_trivial_fast_ssc_counts():
    structure = structure_for(CodeScheme.arikan(), 64)
    assert compile_schedule(structure, np.ones(64, dtype=bool)).fast_ssc_ops == 1
    assert compile_schedule(structure, np.zeros(64, dtype=bool)).fast_ssc_ops == 1
    assert compile_schedule(structure, np.ones(64, dtype=bool)).sc_ops == 64 * 6


def test_schedule_op_list():
    spec = construct_code("apc", 6, 3, 2.0)
    ops = schedule_for(spec).ops
    assert ops[0] == ("f", 2)
    assert sum(1 for kind, _ in ops if kind == "leaf") == 6
    fast = schedule_for(spec, specialize=True)
    assert fast.specialized and fast.node_counts().get("leaf", 0) < 6


def test_decoder_errors():
    spec = construct_code("apc", 6, 3, 2.0)
    with pytest.raises(CodeError):
        sc_decode(np.zeros(5), spec)
    with pytest.raises(CodeError):
        scl_decode(np.zeros(6), spec, list_size=0)
    other = construct_code("apc", 6, 2, 2.0)
    with pytest.raises(CodeError):
        sc_decode(np.zeros(6), spec, schedule=schedule_for(other))
    with pytest.raises(CodeError):
        sc_decode(np.zeros(6), spec, schedule=schedule_for(construct_code("apc", 7, 3, 2.0)))
