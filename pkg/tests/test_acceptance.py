"""The twelve acceptance criteria, each printing one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as part of the
full suite; the status lines are written past pytest's output capture.
"""

import itertools
import math
import time

import numpy as np
import pytest

from qregion import classical, decouple, rateregion, rescalc, squashed
from qregion.entropy import cond_entropy, cond_multiparty_info, multiparty_info, mutual_info, shannon, von_neumann
from qregion.qstate import (
    bell,
    ghz,
    ket,
    purify,
    random_density,
    random_pure,
    separable,
    tensor,
    tensor_all,
    w_state,
)


@pytest.fixture
def criterion(capsys):
    """Call as ``criterion(n, title, ok, detail, started, limit)``; prints and asserts."""

    def check(n, title, ok, detail, started, limit):
        elapsed = time.perf_counter() - started
        passed = bool(ok) and elapsed < limit
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if passed else 'FAIL'} {title}: {detail} "
                  f"({elapsed:.2f}s of {limit:g}s)")
        assert ok, detail
        assert elapsed < limit, f"runtime {elapsed:.1f}s exceeds {limit}s"

    return check


def test_01_bell_ledger(criterion):
    t0 = time.perf_counter()
    b = bell()
    got = {
        "H(A)": von_neumann(b, "A"), "H(B)": von_neumann(b, "B"), "H(AB)": von_neumann(b, ["A", "B"]),
        "H(A|B)": cond_entropy(b, "A", "B"), "I(A;B)": mutual_info(b, "A", "B"),
    }
    want = {"H(A)": 1.0, "H(B)": 1.0, "H(AB)": 0.0, "H(A|B)": -1.0, "I(A;B)": 2.0}
    worst = max(abs(got[k] - want[k]) for k in want)
    criterion(1, "Bell ledger", worst <= 1e-9, f"max deviation {worst:.1e}", t0, 1)


def test_02_shannon_examples(criterion):
    t0 = time.perf_counter()
    coin = shannon([0.5, 0.5])
    outpost = shannon([0.997, 0.002, 0.001])
    ok = coin == 1.0 and abs(outpost - 0.03222) <= 1e-5
    criterion(2, "Shannon examples", ok, f"coin={coin!r} outpost={outpost:.6f}", t0, 1)


def test_03_ghz_squashed(criterion):
    t0 = time.perf_counter()
    dev = max(abs(squashed.esq_pure(g, [[lab] for lab in g.labels]) - m / 2)
              for m in range(2, 7) for g in [ghz(m)])
    res = squashed.esq_optimize(ghz(3), ["X1", "X2", "X3"], d_E=2, restarts=4, seed=0)
    ok = dev <= 1e-9 and abs(res.upper_bound - 1.5) <= 1e-6
    criterion(3, "GHZ squashed entanglement", ok,
              f"closed-form deviation {dev:.1e}, optimizer {res.upper_bound:.9f}", t0, 30)


def test_04_w_state(criterion):
    t0 = time.perf_counter()
    m = 3
    target = 0.5 * math.log2(m**m / (m - 1) ** (m - 1))
    got = squashed.esq_pure(w_state(3), ["X1", "X2", "X3"])
    ok = abs(got - target) <= 1e-5 and abs(target - 1.377443) <= 1e-5
    criterion(4, "W-state value", ok, f"{got:.9f} vs closed form {target:.9f}", t0, 1)


def _product_ensemble(rng, n_parties):
    n_members = int(rng.integers(2, 5))
    probs = rng.dirichlet(np.ones(n_members))
    factors = []
    for _ in range(n_members):
        row = []
        for i in range(n_parties):
            z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            row.append(ket(z, [2], [f"P{i}"]))
        factors.append(row)
    return probs, factors


def _restrict(probs, factors, subset):
    return [(p, tensor_all([row[i] for i in sorted(subset)])) for p, row in zip(probs, factors)]


def test_05_separable_optimality(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst_flag, worst_gap = 0.0, 0.0
    for trial in range(20):
        n = 2 + trial % 2
        probs, factors = _product_ensemble(rng, n)
        labels = [f"P{i}" for i in range(n)]
        full = _restrict(probs, factors, range(n))
        worst_flag = max(worst_flag, abs(squashed.esq_flag_upper(full, labels)))
        pur = purify(separable(full), "R", minimal=True)
        inner = rateregion.inner_constants(pur, labels, "R")
        esq = {}
        for k in inner.subsets():
            if len(k) > 1:
                esq[k] = squashed.esq_flag_upper(_restrict(probs, factors, k), [labels[i] for i in sorted(k)])
        outer = rateregion.outer_constants(inner, esq)
        worst_gap = max(worst_gap, float(np.max(np.abs(outer.as_array() - inner.as_array()))))
    ok = worst_flag < 1e-9 and worst_gap < 1e-9
    criterion(5, "Separable-state optimality", ok,
              f"max |flag bound| {worst_flag:.1e}, max inner/outer gap {worst_gap:.1e}", t0, 10)


def test_06_vertex_equivalence(criterion):
    t0 = time.perf_counter()
    mismatches, failures, worst = 0, 0, 0.0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        dims = [int(rng.integers(2, 4)) for _ in range(3)] + [int(rng.integers(2, 5))]
        s = random_pure(dims, ["A1", "A2", "A3", "R"], seed=seed)
        f = rateregion.inner_constants(s, ["A1", "A2", "A3"], "R")
        if not rateregion.superadditivity_check(f).holds:
            failures += 1
            continue
        corners = rateregion.corner_points_all(f)
        brute = rateregion.vertices_bruteforce(f)
        if len(corners) != len(brute):
            mismatches += 1
            continue
        for c in corners:
            d = min(float(np.max(np.abs(c - b))) for b in brute)
            worst = max(worst, d)
            mismatches += d > 1e-8
    ok = mismatches == 0 and failures == 0
    criterion(6, "Rate-region vertex equivalence", ok,
              f"200 states, {mismatches} mismatches, {failures} superadditivity failures, "
              f"max coordinate gap {worst:.1e}", t0, 300)


def test_07_two_party_reduction(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(100):
        s = random_pure([2, 3, 4], ["A1", "A2", "R"], seed=seed)
        f = rateregion.inner_constants(s, ["A1", "A2"], "R")
        h1, h2, h12 = von_neumann(s, "A1"), von_neumann(s, "A2"), von_neumann(s, ["A1", "A2"])
        want = [0.5 * mutual_info(s, "A1", "R"), 0.5 * mutual_info(s, "A2", "R"), 0.5 * (h1 + h2 + h12)]
        worst = max(worst, max(abs(a - b) for a, b in zip([f[{0}], f[{1}], f[{0, 1}]], want)))
    criterion(7, "Two-party reduction", worst <= 1e-9, f"max deviation {worst:.1e} on 100 states", t0, 30)


def test_08_decoupling_theorem(criterion):
    t0 = time.perf_counter()
    configs, violations, tightest = 0, [], -np.inf
    for d_as, d_r in itertools.product([4, 8, 16], [2, 4]):
        s = random_pure([d_as, d_r], ["A", "R"], seed=d_as * 10 + d_r)
        for d_a1 in [d for d in range(1, d_as + 1) if d_as % d == 0]:
            cfg = decouple.DecouplingTrialConfig(s, ["A"], ["R"], d_a1, samples=200, seed=configs)
            rep = decouple.decoupling_mc(cfg)
            configs += 1
            tightest = max(tightest, rep.mean_sq_td / rep.rhs_bound)
            if not rep.holds:
                violations.append((d_as, d_r, d_a1))
    criterion(8, "Decoupling theorem", not violations,
              f"{configs} configurations, violations {violations}, max mean/bound {tightest:.3f}", t0, 300)


def _brute_force_typical(p, n, eps):
    h = shannon(p)
    ones = np.array([bin(i).count("1") for i in range(2**n)])
    logp = ones * np.log2(p[1]) + (n - ones) * np.log2(p[0])
    ok = np.abs(-logp / n - h) <= eps + 1e-12
    return float(np.sum(2.0 ** logp[ok])), int(ok.sum())


@pytest.mark.xfail(strict=True, reason=(
    "exact typical mass for p=(0.9, 0.1), eps=0.1 is not monotone on n=10..60: the typical "
    "window |k/n - 0.1| <= 0.0316 admits k=3 only at n=30 but k=3..5 at n=40"))
def test_09_typical_set_bounds(criterion):
    t0 = time.perf_counter()
    p, eps = [0.9, 0.1], 0.1
    reports = [classical.typical_stats(p, n, eps) for n in (10, 20, 30, 40, 50, 60)]
    masses = [r.mass for r in reports]
    bounded = all(r.log_count <= r.bound_log_count for r in reports)
    nondecreasing = all(b >= a - 1e-12 for a, b in zip(masses, masses[1:]))
    oracle_ok = True
    for r in reports[:2]:
        mass, count = _brute_force_typical(p, r.n, eps)
        oracle_ok &= abs(r.mass - mass) <= 1e-12 and abs(2**r.log_count - count) <= 1e-6 * count
    ok = bounded and nondecreasing and oracle_ok and masses[-1] < 1
    detail = ("masses " + ", ".join(f"{m:.4f}" for m in masses)
              + f"; count bound {'ok' if bounded else 'violated'}; oracle {'ok' if oracle_ok else 'mismatch'}")
    criterion(9, "Typical-set bounds", ok, detail, t0, 30)


def test_09_attainable_parts():
    """Count bound, oracle agreement and the long-run rise of the mass."""
    p, eps = [0.9, 0.1], 0.1
    reports = [classical.typical_stats(p, n, eps) for n in (10, 20, 30, 40, 50, 60)]
    assert all(r.log_count <= r.bound_log_count for r in reports)
    for r in reports[:2]:
        mass, count = _brute_force_typical(p, r.n, eps)
        assert r.mass == pytest.approx(mass, abs=1e-12)
        assert 2**r.log_count == pytest.approx(count, rel=1e-9)
    assert reports[-1].mass > reports[0].mass
    assert reports[-1].tail < reports[0].tail


def test_10_resource_derivations(criterion):
    t0 = time.perf_counter()
    worst_hash, worst_merge = 0.0, 0.0
    tp = rescalc.builtin("tp")
    for seed in range(100):
        rho = random_density([2, 2], ["A", "B"], seed=seed)
        pur = purify(rho, "R", minimal=True)
        roles = {"A": "A", "B": "B", "R": "R"}
        half_iar = 0.5 * mutual_info(pur, "A", "R")
        hashing = rescalc.compose(rescalc.builtin("mother", pur, roles), rescalc.scale(tp, half_iar))
        target = von_neumann(rho, "B") - von_neumann(rho, ["A", "B"])
        worst_hash = max(worst_hash, abs(hashing.yield_of("ebit") - target))
        merging = rescalc.compose(rescalc.builtin("fqsw", pur, roles), rescalc.scale(tp, half_iar))
        worst_merge = max(worst_merge, abs(merging.cost_of("ebit") - cond_entropy(rho, "A", "B")))
    ok = worst_hash <= 1e-9 and worst_merge <= 1e-9
    criterion(10, "Resource derivations", ok,
              f"hashing deviation {worst_hash:.1e}, merging deviation {worst_merge:.1e}", t0, 30)


def test_11_lemma_suite(criterion):
    t0 = time.perf_counter()
    worst = {"merging": 0.0, "monotonicity": math.inf, "chain": math.inf}
    n_states = 0
    for seed in range(1000):
        nq = 4 + seed % 2
        labels = ["A", "Ap", "X1", "E"] if nq == 4 else ["A", "Ap", "X1", "X2", "E"]
        s = random_density([2] * nq, labels, rank=None if seed % 3 else 1, seed=seed)
        xs = [[x] for x in labels if x.startswith("X")]
        n_states += 1
        merge_gap = abs(multiparty_info(s, [["A"], ["Ap"]] + xs) - mutual_info(s, "A", "Ap")
                        - multiparty_info(s, [["A", "Ap"]] + xs))
        worst["merging"] = max(worst["merging"], merge_gap)
        big = cond_multiparty_info(s, [["A", "Ap"]] + xs, "E")
        mono = big - cond_multiparty_info(s, [["A"]] + xs, "E")
        chain = big - cond_multiparty_info(s, [["A"]] + xs, ["Ap", "E"])
        worst["monotonicity"] = min(worst["monotonicity"], mono)
        worst["chain"] = min(worst["chain"], chain)
    ok = worst["merging"] <= 1e-9 and worst["monotonicity"] >= -1e-9 and worst["chain"] >= -1e-9
    criterion(11, "Lemma suite", ok,
              f"{n_states} states; merging gap {worst['merging']:.1e}, "
              f"min monotonicity margin {worst['monotonicity']:.1e}, min chain margin {worst['chain']:.1e}",
              t0, 120)


def test_12_black_hole(criterion):
    t0 = time.perf_counter()
    simple = decouple.blackhole_threshold(bell(("A", "B1")), "A")
    s = tensor(bell(("A", "B1")), bell(("B2", "L")))
    lost = decouple.blackhole_threshold(s, "A", "lost", b2="B2", lost="L")
    added = lost - von_neumann(s, "A")
    ok = abs(simple - 1.0) <= 1e-9 and abs(added - 0.5 * mutual_info(s, "B2", "L")) <= 1e-9
    criterion(12, "Black-hole thresholds", ok, f"simple {simple:.9f}, lost-mode increment {added:.9f}", t0, 1)
