"""Acceptance suite: one test per criterion, each logging a pass/fail line."""
import itertools
import time

import numpy as np

from asympolar.channel import StopRule, run_fer, snr_at_fer
from asympolar.cli import main
from asympolar.complexity import count_fast_ssc_ops, memory_footprint, verify_appendix_inequality
from asympolar.construction import construct_code
from asympolar.core import CodeScheme, CodeSpec, gf2_matvec
from asympolar.decoder import fast_ssc_decode, sc_decode, scl_decode
from asympolar.encoder import encode, encode_structure, generator_matrix
from asympolar.schedule import structure_for

TABLE_I = {
    "apc-asc": {576: 5120, 768: 7168, 1536: 15872, 2304: 25088, 3072: 34816},
    "shortened": {576: 10240, 768: 10240, 1536: 22528, 2304: 49152, 3072: 49152},
    "mk": {576: 4608, 768: 6912, 1536: 15360, 2304: 23040, 3072: 33792},
}


def _count_ops_rows(capsys, *argv):
    assert main(["count-ops", *argv]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    keys = lines[0].split(",")
    return [dict(zip(keys, line.split(","))) for line in lines[1:]]


def test_criterion_1_table_counts(capsys, acceptance):
    start = time.process_time()
    rows = _count_ops_rows(capsys, "--all", "--n", "576,768,1536,2304,3072")
    elapsed = time.process_time() - start
    got = {(r["scheme"], int(r["N"])): int(r["sc_ops"]) for r in rows}
    expected = {(s, n): v for s, table in TABLE_I.items() for n, v in table.items()}
    mismatches = {key: (got.get(key), v) for key, v in expected.items() if got.get(key) != v}
    ok = not mismatches and elapsed < 1.0
    acceptance.record(1, ok, f"15 SC op counts, {len(mismatches)} mismatches, {elapsed:.2f} s cpu")
    assert not mismatches, mismatches
    assert elapsed < 1.0


G6_ASC = [[1, 0, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0], [1, 0, 1, 0, 0, 0],
          [1, 1, 1, 1, 0, 0], [1, 0, 1, 0, 1, 0], [1, 1, 1, 1, 1, 1]]
G6_DES = [[1, 0, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0], [1, 0, 1, 0, 0, 0],
          [1, 1, 1, 1, 0, 0], [1, 0, 0, 0, 1, 0], [1, 1, 0, 0, 1, 1]]


def test_criterion_2_six_bit_generators(acceptance):
    asc = generator_matrix(CodeScheme.asymmetric(True), 6).tolist()
    des = generator_matrix(CodeScheme.asymmetric(False), 6).tolist()
    ok = asc == G6_ASC and des == G6_DES
    acceptance.record(2, ok, f"ascending {'match' if asc == G6_ASC else 'differ'}, "
                             f"descending {'match' if des == G6_DES else 'differ'}")
    assert ok


def test_criterion_3_worked_example(acceptance):
    spec = construct_code("apc", 7, 4, 3.0, ascending=True)
    ranking = spec.profile.ranking
    means = spec.profile.means[list(ranking)]
    min_gap = float(np.min(-np.diff(means)))
    ok = (ranking == (6, 5, 4, 2, 0, 3, 1) and set(spec.info_set) == {6, 5, 4, 2}
          and set(spec.frozen_set) == {0, 3, 1} and min_gap > 1e-3)
    acceptance.record(3, ok, f"ranking {list(ranking)}, min adjacent mean gap {min_gap:.3g}")
    assert ranking == (6, 5, 4, 2, 0, 3, 1)
    assert set(spec.info_set) == {6, 5, 4, 2} and set(spec.frozen_set) == {0, 3, 1}
    assert min_gap > 1e-3


def test_criterion_4_bound_sweep(acceptance):
    start = time.process_time()
    report = verify_appendix_inequality(8192)
    elapsed = time.process_time() - start
    ps = sorted({p for p, _, _, _ in report.closed_forms})
    ok = report.ok and ps == list(range(2, 14)) and elapsed < 1.0
    acceptance.record(4, ok, f"{report.checked} (N, order) pairs, {len(report.violations)} violations, "
                             f"closed forms p={ps[0]}..{ps[-1]}, {elapsed:.2f} s cpu")
    assert report.ok, report.violations[:5]
    assert ps == list(range(2, 14))
    assert elapsed < 1.0


def _random_spec(rng, scheme, n_total, k):
    n = scheme.native_length(n_total)
    forced = set(scheme.pattern)
    free = [i for i in range(n) if i not in forced]
    info = tuple(int(i) for i in rng.permutation(free)[:k])
    return CodeSpec(n_total, k, scheme, info, tuple(sorted(set(range(n)) - set(info))))


def _random_scheme(rng):
    kind = rng.integers(0, 4)
    if kind == 0:
        n = int(rng.integers(2, 130))
        return CodeScheme.asymmetric(bool(rng.integers(0, 2))), n
    if kind == 1:
        kernels = tuple(int(k) for k in rng.choice([2, 3], size=int(rng.integers(1, 5))))
        return CodeScheme.multikernel(kernels), int(np.prod(kernels))
    n_mother = 1 << int(rng.integers(3, 7))
    n = int(rng.integers(n_mother // 2 + 1, n_mother))
    if kind == 2:
        return CodeScheme.shortened(range(n, n_mother)), n
    return CodeScheme.punctured(tuple(int(i) for i in rng.permutation(n_mother)[:n_mother - n])), n


def _graph_vs_dense(rng):
    cases = 0
    while cases < 1000:
        if rng.integers(0, 2):
            n, scheme = int(rng.integers(2, 65)), CodeScheme.asymmetric(bool(rng.integers(0, 2)))
        else:
            kernels = tuple(int(k) for k in rng.choice([2, 3], size=int(rng.integers(1, 4))))
            n, scheme = int(np.prod(kernels)), CodeScheme.multikernel(kernels)
        u = rng.integers(0, 2, size=(10, n)).astype(np.uint8)
        x = encode_structure(structure_for(scheme, n), u)
        g = generator_matrix(scheme, n)
        if any(not np.array_equal(row, gf2_matvec(g, uu)) for row, uu in zip(x, u)):
            return cases, False
        cases += len(u)
    return cases, True


def _fast_vs_sc(rng):
    cases = 0
    while cases < 1000:
        scheme, n = _random_scheme(rng)
        n_free = scheme.native_length(n) - len(scheme.pattern)
        spec = _random_spec(rng, scheme, n, int(rng.integers(0, n_free + 1)))
        if rng.integers(0, 2):
            llr = rng.integers(-2, 3, size=(20, spec.n_native)).astype(float)
        else:
            llr = rng.normal(0.5, 2.0, size=(20, spec.n_native))
        u_sc, x_sc = sc_decode(llr, spec)
        u_fast, x_fast = fast_ssc_decode(llr, spec)
        if not (np.array_equal(u_sc, u_fast) and np.array_equal(x_sc, x_fast)):
            return cases, False
        cases += len(llr)
    return cases, True


def _scl1_vs_sc(rng):
    cases = 0
    while cases < 1000:
        scheme, n = _random_scheme(rng)
        n_free = scheme.native_length(n) - len(scheme.pattern)
        spec = _random_spec(rng, scheme, n, int(rng.integers(0, n_free + 1)))
        llr = rng.normal(0.3, 2.0, size=(20, spec.n_native))
        if not np.array_equal(scl_decode(llr, spec, list_size=1), sc_decode(llr, spec)[0]):
            return cases, False
        cases += len(llr)
    return cases, True


def _ml(llrs, spec, g):
    info = sorted(spec.info_set)
    words = np.zeros((1 << len(info), spec.n_native), dtype=np.int64)
    words[:, info] = np.array(list(itertools.product((0, 1), repeat=len(info))))
    scores = (1 - 2 * ((words @ g) & 1)) @ llrs.T
    return words[np.argmax(scores, axis=0)]


def _scl_vs_ml(rng):
    cases = 0
    schemes = (CodeScheme.arikan(), CodeScheme.asymmetric(True, (4, 4)))
    g = generator_matrix(CodeScheme.arikan(), 8).astype(np.int64)
    while cases < 1000:
        k = int(rng.integers(1, 6))
        spec = _random_spec(rng, schemes[int(rng.integers(0, 2))], 8, k)
        llr = rng.normal(0.4, 1.3, size=(25, 8))
        if not np.array_equal(scl_decode(llr, spec, list_size=1 << k), _ml(llr, spec, g)):
            return cases, False
        cases += len(llr)
    return cases, True


def _forced_halves_vs_arikan(rng):
    cases = 0
    while cases < 1000:
        n = 2 ** (int(rng.integers(1, 7)) + 1)
        k = int(rng.integers(1, n + 1))
        apc = _random_spec(rng, CodeScheme.asymmetric(bool(rng.integers(0, 2)), (n // 2, n // 2)), n, k)
        ari = CodeSpec(n, k, CodeScheme.arikan(), apc.info_set, apc.frozen_set)
        u = np.zeros((20, n), dtype=np.uint8)
        u[:, list(apc.info_set)] = rng.integers(0, 2, size=(20, k))
        x = encode(u, apc)
        llr = 2.0 * (1 - 2.0 * x) + rng.normal(0, 1.5, size=x.shape)
        same = (np.array_equal(x, encode(u, ari))
                and np.array_equal(sc_decode(llr, apc)[0], sc_decode(llr, ari)[0])
                and np.array_equal(fast_ssc_decode(llr, apc)[0], fast_ssc_decode(llr, ari)[0])
                and np.array_equal(scl_decode(llr, apc, list_size=4), scl_decode(llr, ari, list_size=4)))
        if not same:
            return cases, False
        cases += len(u)
    return cases, True


def test_criterion_5_oracle_equivalences(acceptance):
    rng = np.random.default_rng(2024)
    suites = {
        "graph=dense": _graph_vs_dense,
        "fast-ssc=sc": _fast_vs_sc,
        "scl1=sc": _scl1_vs_sc,
        "scl=ml": _scl_vs_ml,
        "halves=arikan": _forced_halves_vs_arikan,
    }
    results = {name: fn(rng) for name, fn in suites.items()}
    ok = all(passed and cases >= 1000 for cases, passed in results.values())
    detail = ", ".join(f"{name} {cases}{'' if passed else ' FAIL'}" for name, (cases, passed) in results.items())
    acceptance.record(5, ok, detail)
    assert ok, results


def test_criterion_6_fast_ssc_band(acceptance):
    reductions = {}
    for n in (576, 1056, 1536, 2304, 3072):
        for rate in (0.25, 0.5, 0.75):
            k = int(round(rate * n))
            apc = count_fast_ssc_ops(construct_code("apc", n, k, 2.0))
            ps = count_fast_ssc_ops(construct_code("shortened", n, k, 2.0))
            reductions[n, rate] = 1 - apc / ps
    values = np.array(list(reductions.values()))
    ok = bool(np.all(values > 0) and np.all(values <= 0.35))
    acceptance.record(6, ok, f"15 points, reduction {100 * values.min():.1f}%..{100 * values.max():.1f}%")
    assert ok, reductions


def test_criterion_7_fer_proxy(acceptance):
    stop = StopRule(100, 1_000_000)
    scl_grid = [1.5, 1.75, 2.0]
    sc_grid = [2.25, 2.5, 2.75, 3.0, 3.25]
    details, ok = [], True
    for n in (576, 768):
        k = n // 2
        curves = {
            "apc": run_fer("apc", n, k, scl_grid, "scl", 8, stop, seed=7),
            "shortened": run_fer("shortened", n, k, scl_grid, "scl", 8, stop, seed=7),
            "apc-sc": run_fer("apc", n, k, sc_grid, "sc", stop=stop, seed=7),
        }
        for points in curves.values():
            for a, b in zip(points, points[1:]):
                ok &= b.fer <= a.fer + 2 * np.hypot(a.std_error, b.std_error)
        snr = {name: snr_at_fer(points, 1e-2) for name, points in curves.items()}
        if None in snr.values():
            ok = False
            details.append(f"N={n} FER 1e-2 not bracketed {snr}")
            continue
        gap = abs(snr["apc"] - snr["shortened"])
        gain = snr["apc-sc"] - snr["apc"]
        ok &= gap <= 0.15 and gain >= 0.4
        details.append(f"N={n} apc {snr['apc']:.3f} dB, shortened {snr['shortened']:.3f} dB, "
                       f"gap {gap:.3f} dB, SCL gain over SC {gain:.2f} dB")
    acceptance.record(7, bool(ok), "; ".join(details))
    assert ok, details


def test_criterion_8_memory(capsys, acceptance):
    rows = _count_ops_rows(capsys, "--scheme", "apc", "--n", "2304")
    rows += _count_ops_rows(capsys, "--scheme", "shortened", "--n", "2304")
    words = {r["scheme"]: (int(r["alpha_words"]), int(r["beta_words"])) for r in rows}
    a2048, b2048 = memory_footprint(CodeScheme.arikan(), 2048)
    ari4096 = memory_footprint(CodeScheme.arikan(), 4096)
    apc_ok = words["apc-asc"] == (a2048 - 2048 + 2304, b2048)
    ps_ok = words["shortened"] == ari4096
    acceptance.record(8, apc_ok and ps_ok, f"apc {words['apc-asc']} vs arikan-2048 {(a2048, b2048)}, "
                                           f"shortened {words['shortened']} vs arikan-4096 {ari4096}")
    assert apc_ok and ps_ok
