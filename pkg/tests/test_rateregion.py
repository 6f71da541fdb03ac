import itertools
import json

import numpy as np
import pytest

from qregion import rateregion as rr
from qregion.classical import classical_sw_setfunction
from qregion.entropy import mutual_info, von_neumann
from qregion.errors import CapacityError, InvariantError, LabelError
from qregion.qstate import PureState, bell, ghz, ket, random_density, random_pure, tensor
from qregion.squashed import esq_pure


def bell_plus_idle():
    s = tensor(bell(("A1", "R")), ket([1, 0], [2], ["A2"]))
    return s


def random_instance(m, seed, dims=None):
    rng = np.random.default_rng(seed)
    dims = dims or [int(rng.integers(2, 4)) if i < m else int(rng.integers(2, 5)) for i in range(m + 1)]
    labels = [f"A{i + 1}" for i in range(m)] + ["R"]
    s = random_pure(dims, labels, seed=seed)
    return s, [[lab] for lab in labels[:m]]


def lp_vertices(f):
    """Independent oracle: vertices as the Q reached by enumerating tight sets and solving least squares."""
    subsets = f.subsets()
    a = np.array([[1.0 if i in k else 0.0 for i in range(f.m)] for k in subsets])
    c = np.array([f[k] for k in subsets])
    out = []
    for rows in itertools.combinations(range(len(subsets)), f.m):
        sub = a[list(rows)]
        if np.linalg.matrix_rank(sub) < f.m:
            continue
        q = np.linalg.lstsq(sub, c[list(rows)], rcond=None)[0]
        if np.all(a @ q >= c - 1e-9) and not any(np.allclose(q, p, atol=1e-8) for p in out):
            out.append(q)
    return sorted(out, key=lambda p: tuple(np.round(p, 7)))


def same_points(xs, ys, tol=1e-8):
    if len(xs) != len(ys):
        return False
    return all(any(np.max(np.abs(x - y)) <= tol for y in ys) for x in xs)


class TestSetFunction:
    def test_incomplete(self):
        with pytest.raises(InvariantError):
            rr.SetFunction(2, {frozenset({0}): 1.0})

    def test_empty_is_zero(self):
        f = rr.SetFunction(1, {frozenset({0}): 2.0})
        assert f[()] == 0.0 and f[{0}] == 2.0

    def test_as_array(self):
        f = rr.SetFunction(2, {frozenset({0}): 1, frozenset({1}): 2, frozenset({0, 1}): 4})
        assert list(f.as_array()) == [0, 1, 2, 4]


class TestInnerConstants:
    def test_bell_plus_idle(self):
        f = rr.inner_constants(bell_plus_idle(), ["A1", "A2"], "R")
        assert [f[{0}], f[{1}], f[{0, 1}]] == pytest.approx([1, 0, 1])

    def test_two_party_reduction(self):
        for seed in range(50):
            s, parts = random_instance(2, seed)
            f = rr.inner_constants(s, parts, "R")
            h1, h2 = von_neumann(s, "A1"), von_neumann(s, "A2")
            h12 = von_neumann(s, ["A1", "A2"])
            assert f[{0, 1}] == pytest.approx(0.5 * (h1 + h2 + h12), abs=1e-9)
            assert f[{0}] == pytest.approx(0.5 * mutual_info(s, "A1", "R"), abs=1e-9)

    def test_product_decomposes(self):
        a = random_pure([2, 2], ["A1", "R1"], seed=1)
        b = random_pure([2, 2], ["A2", "R2"], seed=2)
        amps = tensor(a, b).amplitudes.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(-1)
        s = PureState(amps, (2, 2, 4), ("A1", "A2", "R"))
        f = rr.inner_constants(s, ["A1", "A2"], "R")
        assert f[{0, 1}] == pytest.approx(f[{0}] + f[{1}], abs=1e-9)

    def test_requires_purity(self):
        s = random_density([2, 2, 2], ["A1", "A2", "R"], seed=0)
        with pytest.raises(InvariantError):
            rr.inner_constants(s, ["A1", "A2"], "R")

    def test_reference_overlap(self):
        with pytest.raises(LabelError):
            rr.inner_constants(bell_plus_idle(), ["A1", "R"], "R")

    def test_superadditive_random(self):
        for seed in range(50):
            s, parts = random_instance(3, seed)
            assert rr.superadditivity_check(rr.inner_constants(s, parts)).holds


class TestOuterConstants:
    def test_zero_esq(self):
        f = rr.inner_constants(ghz(4).relabel(["A1", "A2", "A3", "R"]), ["A1", "A2", "A3"], "R")
        zeros = {k: 0.0 for k in f.subsets() if len(k) > 1}
        assert np.allclose(rr.outer_constants(f, zeros).as_array(), f.as_array())

    def test_ghz_strictly_smaller(self):
        g = ghz(4).relabel(["A1", "A2", "A3", "R"])
        parts = ["A1", "A2", "A3"]
        f = rr.inner_constants(g, parts, "R")
        esq = {}
        for k in f.subsets():
            if len(k) > 1:
                # supplied m/2-type values; the subtraction is what is under test
                esq[k] = len(k) / 2
        out = rr.outer_constants(f, esq)
        for k in f.subsets():
            if len(k) > 1:
                assert out[k] < f[k]
            else:
                assert out[k] == f[k]

    def test_esq_pure_subtraction(self):
        s = ghz(3).relabel(["A1", "A2", "R"])
        f = rr.inner_constants(s, ["A1", "A2"], "R")
        esq = {frozenset({0, 1}): 0.25}
        out = rr.outer_constants(f, esq, exact={frozenset({0, 1}): False})
        assert out[{0, 1}] == pytest.approx(f[{0, 1}] - 0.25)
        assert out.exact[frozenset({0, 1})] is False
        assert esq_pure(ghz(3), ["X1", "X2", "X3"]) == pytest.approx(1.5)

    def test_missing(self):
        f = rr.inner_constants(bell_plus_idle(), ["A1", "A2"], "R")
        with pytest.raises(KeyError):
            rr.outer_constants(f, {})

    def test_entrywise_below(self):
        rng = np.random.default_rng(4)
        s, parts = random_instance(3, 4)
        f = rr.inner_constants(s, parts)
        esq = {k: (0.0 if rng.random() < 0.5 else rng.uniform(0, 0.2)) for k in f.subsets() if len(k) > 1}
        out = rr.outer_constants(f, esq)
        for k in f.subsets():
            assert out[k] <= f[k]
            assert (out[k] == f[k]) == (esq.get(k, 0.0) == 0.0)


class TestCorners:
    def test_bell_plus_idle(self):
        f = rr.inner_constants(bell_plus_idle(), ["A1", "A2"], "R")
        for pi in ([0, 1], [1, 0]):
            assert rr.corner_point(f, pi) == pytest.approx([1, 0])

    def test_symmetric(self):
        w = ghz(4).relabel(["A1", "A2", "A3", "R"])
        f = rr.inner_constants(w, ["A1", "A2", "A3"], "R")
        base = sorted(rr.corner_point(f, [0, 1, 2]))
        for pi in itertools.permutations(range(3)):
            assert sorted(rr.corner_point(f, pi)) == pytest.approx(base)

    def test_independent_sources(self):
        f = classical_sw_setfunction(np.outer([0.3, 0.7], [0.6, 0.4]))
        assert len(rr.corner_points_all(f)) == 1

    def test_three_sender_count(self):
        for seed in range(20):
            s, parts = random_instance(3, seed)
            assert 1 <= len(rr.corner_points_all(rr.inner_constants(s, parts))) <= 6

    def test_bad_permutation(self):
        f = rr.inner_constants(bell_plus_idle(), ["A1", "A2"], "R")
        with pytest.raises(InvariantError):
            rr.corner_point(f, [0, 0])

    def test_refuses_non_superadditive(self):
        bad = rr.SetFunction(2, {frozenset({0}): 1, frozenset({1}): 1, frozenset({0, 1}): 1})
        with pytest.raises(InvariantError):
            rr.corner_points_all(bad)

    def test_capacity(self):
        m = 6
        f = rr.SetFunction(m, {frozenset(i for i in range(m) if b >> i & 1): 0.0 for b in range(1, 1 << m)})
        with pytest.raises(CapacityError):
            rr.vertices_bruteforce(f)

    def test_chain_constraints_tight(self):
        for seed in range(30):
            s, parts = random_instance(3, seed)
            f = rr.inner_constants(s, parts)
            for pi in itertools.permutations(range(3)):
                rep = rr.membership(f, rr.corner_point(f, pi))
                assert rep.member
                for i in range(3):
                    assert frozenset(pi[i:]) in rep.tight


class TestVertexEquivalence:
    @pytest.mark.parametrize("m,count", [(2, 200), (3, 200)])
    def test_random(self, m, count):
        for seed in range(count):
            s, parts = random_instance(m, seed)
            f = rr.inner_constants(s, parts)
            assert same_points(rr.corner_points_all(f), rr.vertices_bruteforce(f))

    def test_four_senders(self):
        for seed in range(20):
            s, parts = random_instance(4, seed, dims=[2, 2, 2, 2, 4])
            f = rr.inner_constants(s, parts)
            assert same_points(rr.corner_points_all(f), rr.vertices_bruteforce(f))

    def test_against_lstsq_oracle(self):
        for seed in range(20):
            s, parts = random_instance(3, 500 + seed)
            f = rr.inner_constants(s, parts)
            assert same_points(rr.vertices_bruteforce(f), lp_vertices(f))

    def test_degenerate(self):
        f = rr.SetFunction(3, {k: float(len(k)) for k in
                               (frozenset(c) for r in range(1, 4) for c in itertools.combinations(range(3), r))})
        assert same_points(rr.corner_points_all(f), rr.vertices_bruteforce(f))
        assert len(rr.corner_points_all(f)) == 1

    def test_classical_sw_corners(self):
        f = classical_sw_setfunction([[0.45, 0.05], [0.1, 0.4]])
        assert same_points(rr.corner_points_all(f), rr.vertices_bruteforce(f))
        assert len(rr.vertices_bruteforce(f)) == 2


class TestMembership:
    def test_huge(self):
        f = rr.inner_constants(bell_plus_idle(), ["A1", "A2"], "R")
        assert rr.membership(f, [1e9, 1e9])

    def test_perturbed_corner(self):
        for seed in range(20):
            s, parts = random_instance(3, seed)
            f = rr.inner_constants(s, parts)
            pi = [1, 2, 0]
            q = rr.corner_point(f, pi)
            # the last sender's singleton constraint is tight
            q[0] -= 1e-3
            rep = rr.membership(f, q)
            assert not rep.member and frozenset({0}) in rep.violated

    def test_saturation(self):
        rng = np.random.default_rng(9)
        for seed in range(40):
            s, parts = random_instance(3, seed)
            f = rr.inner_constants(s, parts)
            corners = rr.corner_points_all(f)
            w = rng.dirichlet(np.ones(len(corners)))
            points = corners + [sum(wi * c for wi, c in zip(w, corners))]
            for q in points:
                tight = set(rr.membership(f, q).tight)
                for k, l in itertools.combinations(tight, 2):
                    if k | l:
                        assert k | l in tight
                    if k & l:
                        assert k & l in tight

    def test_shape(self):
        f = rr.inner_constants(bell_plus_idle(), ["A1", "A2"], "R")
        with pytest.raises(InvariantError):
            rr.membership(f, [1, 2, 3])


class TestSuperadditivity:
    def test_violation_reported(self):
        bad = rr.SetFunction(2, {frozenset({0}): 1, frozenset({1}): 1, frozenset({0, 1}): 1})
        rep = rr.superadditivity_check(bad)
        assert not rep.holds
        assert set(rep.worst_pair) == {frozenset({0}), frozenset({1})}
        assert rep.worst_margin == pytest.approx(-1.0)

    def test_brute_force_margin(self):
        s, parts = random_instance(3, 77)
        f = rr.inner_constants(s, parts)
        subsets = [frozenset()] + f.subsets()
        worst = min(f[k | l] + f[k & l] - f[k] - f[l] for k in subsets for l in subsets)
        assert rr.superadditivity_check(f).worst_margin == pytest.approx(worst, abs=1e-12)


class TestMergingRegion:
    def test_bell(self):
        f = rr.merging_region(bell(), ["A", "B"])
        assert [f[{0}], f[{1}], f[{0, 1}]] == pytest.approx([-1, -1, 0])

    def test_classical_embedding(self):
        from qregion.qstate import MultipartiteState

        p = np.array([[0.3, 0.2], [0.1, 0.4]])
        s = MultipartiteState(np.diag(p.reshape(-1)), [2, 2], ["X", "Y"])
        q = rr.merging_region(s, ["X", "Y"])
        c = classical_sw_setfunction(p)
        assert np.allclose(q.as_array(), c.as_array())

    def test_product(self):
        a, b = random_density([2], ["A"], seed=1), random_density([3], ["B"], seed=2)
        f = rr.merging_region(tensor(a, b), ["A", "B"])
        assert f[{0}] == pytest.approx(von_neumann(a, "A"))
        assert f[{1}] == pytest.approx(von_neumann(b, "B"))


class TestExport:
    def test_bell_plus_idle(self):
        d = rr.export_region(rr.inner_constants(bell_plus_idle(), ["A1", "A2"], "R"))
        assert len(d.h_rep) == 3 and len(d.cone) == 2
        assert len(d.vertices) == 1 and d.vertices[0] == pytest.approx([1, 0])

    def test_ghz_instance(self):
        g = ghz(4).relabel(["A1", "A2", "A3", "R"])
        d = rr.export_region(rr.inner_constants(g, ["A1", "A2", "A3"], "R"))
        assert len(d.h_rep) == 7 and 1 <= len(d.vertices) <= 6

    def test_zero_region(self):
        f = rr.SetFunction(2, {frozenset({0}): 0, frozenset({1}): 0, frozenset({0, 1}): 0})
        d = rr.export_region(f)
        assert len(d.vertices) == 1 and np.allclose(d.vertices[0], 0)

    def test_serialization(self):
        d = rr.export_region(rr.inner_constants(bell_plus_idle(), ["A1", "A2"], "R"))
        obj = json.loads(d.to_json())
        assert obj["m"] == 2 and obj["vertices"] == [pytest.approx([1.0, 0.0])]
        assert d.to_csv().splitlines() == ["Q0,Q1", "1.000000000,0.000000000"]
