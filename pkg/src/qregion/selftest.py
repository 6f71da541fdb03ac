"""Sanity checks with known answers, grouped by module, for ``--selftest``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import classical, decouple, entropy, qstate, rateregion, rescalc, squashed
from .qstate import MultipartiteState, PureState, bell, ket, tensor

TOL = 1e-9


def _close(a, b, tol=TOL) -> bool:
    return bool(np.allclose(a, b, atol=tol, rtol=0))


def _zero_ket(label: str) -> PureState:
    return ket([1, 0], [2], [label])


def _mixed_qubit(label: str = "A") -> MultipartiteState:
    return qstate.maximally_mixed(2, label)


# qstate -------------------------------------------------------------------

def _qstate_checks():
    bb = tensor(bell(("A", "B")), bell(("C", "D")))
    yield "tensor of Bell pairs has unit trace", _close(np.trace(bb.density().matrix).real, 1.0)
    rho = qstate.random_density([2], ["A"], seed=1)
    prod = tensor(rho, _zero_ket("B").density())
    yield "purity multiplies with a pure factor", _close(prod.purity(), rho.purity())
    yield "partial trace of a product", _close(qstate.partial_trace(prod, "A").matrix, rho.matrix)
    pur = qstate.purify(_mixed_qubit())
    yield "purified mixed qubit", pur.dims == (2, 2) and _close(qstate.partial_trace(pur, "A").matrix, np.eye(2) / 2)
    yield "pure input gets a trivial reference", qstate.purify(bell()).dims == (2, 2, 1)
    u1 = qstate.haar_unitary(1, seed=0).matrix
    yield "d=1 Haar unitary is a phase", _close(abs(u1[0, 0]), 1.0)
    yield "Haar sampling is deterministic", _close(qstate.haar_unitary(4, 7).matrix, qstate.haar_unitary(4, 7).matrix, 0)
    yield "F(rho, rho) = 1", _close(qstate.fidelity(rho, rho), 1.0)
    yield "orthogonal pure states", _close(qstate.fidelity(ket([1, 0], [2]), ket([0, 1], [2])), 0.0)
    yield "TD(rho, rho) = 0", _close(qstate.trace_distance(rho, rho), 0.0)
    sep = qstate.separable([(0.5, ket([1, 0, 0, 0], [2, 2])), (0.5, ket([0, 0, 0, 1], [2, 2]))])
    yield "classically correlated mixture", _close(sep.matrix, np.diag([0.5, 0, 0, 0.5]))


# entropy ------------------------------------------------------------------

def _entropy_checks():
    yield "H(1, 0) = 0", _close(entropy.shannon([1, 0]), 0.0)
    yield "maximally mixed entropy", _close(entropy.von_neumann(qstate.maximally_mixed(8), "A"), 3.0)
    rho = qstate.random_density([2], ["A"], seed=2)
    prod = tensor(rho, qstate.random_pure([2], ["B"], seed=3))
    yield "product with pure factor", _close(entropy.von_neumann(prod, ["A", "B"]), entropy.von_neumann(rho, "A"))
    mixed = tensor(rho, qstate.random_density([2], ["B"], seed=4))
    yield "I(A;B) of a product", _close(entropy.mutual_info(mixed, "A", "B"), 0.0)
    corr = qstate.separable([(0.5, ket([1, 0, 0, 0], [2, 2])), (0.5, ket([0, 0, 0, 1], [2, 2]))])
    yield "correlated bits share one bit", _close(entropy.mutual_info(corr, "A", "B"), 1.0)
    triv = tensor(qstate.random_density([2, 2], ["A", "B"], seed=5), _zero_ket("C"))
    yield "trivial conditioning", _close(entropy.cond_mutual_info(triv, "A", "B", "C"),
                                          entropy.mutual_info(triv, "A", "B"))
    three = tensor(mixed, qstate.random_density([2], ["C"], seed=6))
    yield "product multiparty information", _close(entropy.multiparty_info(three, ["A", "B", "C"]), 0.0)
    yield "dimension-1 conditioning", _close(entropy.cond_multiparty_info(triv, ["A", "B"], "C"),
                                              entropy.multiparty_info(triv, ["A", "B"]))
    rep = entropy.af_conditional_continuity_check(mixed, mixed, "A", "B")
    yield "continuity at zero distance", rep.holds and rep.lhs == 0 and rep.bound == 0


# classical ----------------------------------------------------------------

def _classical_checks():
    r = classical.typical_stats([1, 0], 25, 0.1)
    yield "deterministic source", _close(r.mass, 1.0) and _close(r.log_count, 0.0)
    r = classical.typical_stats([0.5, 0.5], 10, 0.1)
    yield "uniform source", _close(r.mass, 1.0) and _close(r.log_count, 10.0)
    yield "uniform source has no tail", all(classical.aep_tail([0.5, 0.5], n, 0.05) == 0 for n in (1, 5, 20))
    r = classical.schumacher_rate_demo([1, 0, 0], 12, 0.1)
    yield "pure spectrum", _close(r.rate, 0.0) and _close(r.mass, 1.0)
    r = classical.schumacher_rate_demo([0.5, 0.5], 12, 0.1)
    yield "maximally mixed spectrum", _close(r.log_count, 12.0) and _close(r.mass, 1.0)
    f = classical.classical_sw_setfunction(np.full((2, 2), 0.25))
    yield "independent fair bits", _close([f[{0}], f[{1}], f[{0, 1}]], [1, 1, 2])


# squashed -----------------------------------------------------------------

def _squashed_checks():
    prod = tensor(qstate.random_pure([2], ["A"], seed=1), qstate.random_pure([2], ["B"], seed=2))
    yield "product pure state", _close(squashed.esq_pure(prod, ["A", "B"]), 0.0)
    yield "single product member", _close(squashed.esq_flag_upper([(1.0, prod)], ["A", "B"]), 0.0)
    res = squashed.esq_optimize(bell(), ["A", "B"], d_E=2, restarts=2, seed=0)
    yield "pure input fixes the optimum", _close(res.upper_bound, 1.0, 1e-6)


# rateregion ---------------------------------------------------------------

def _region_checks():
    s = _paired_reference()
    f = rateregion.inner_constants(s, ["A1", "A2"], "R")
    half = [0.5 * entropy.mutual_info(s, a, "R") for a in ("A1", "A2")]
    yield "additive constants for a product", _close([f[{0}], f[{1}], f[{0, 1}]], [half[0], half[1], sum(half)])
    out = rateregion.outer_constants(f, {frozenset({0, 1}): 0.0})
    yield "zero E_sq keeps the region", _close(out.as_array(), f.as_array())
    sym = rateregion.SetFunction(2, {frozenset({0}): 1, frozenset({1}): 1, frozenset({0, 1}): 3})
    pts = {tuple(np.round(rateregion.corner_point(sym, p), 9)) for p in ([0, 1], [1, 0])}
    yield "symmetric constants", pts == {(1.0, 2.0), (2.0, 1.0)}
    indep = rateregion.SetFunction(2, {frozenset({0}): 1, frozenset({1}): 2, frozenset({0, 1}): 3})
    yield "independent sources give one corner", len(rateregion.corner_points_all(indep)) == 1
    yield "large tuples are members", rateregion.membership(sym, [1e6, 1e6]).member
    bad = rateregion.SetFunction(2, {frozenset({0}): 1, frozenset({1}): 1, frozenset({0, 1}): 1})
    rep = rateregion.superadditivity_check(bad)
    yield "violation is reported", not rep.holds and rep.worst_pair is not None
    prod = tensor(qstate.random_pure([2], ["A"], seed=8), qstate.random_pure([2], ["B"], seed=9))
    mr = rateregion.merging_region(prod.density(), ["A", "B"])
    yield "product merging region", _close([mr[{0}], mr[{1}], mr[{0, 1}]], [0, 0, 0])
    zero = rateregion.SetFunction(3, {frozenset(i for i in range(3) if m >> i & 1): 0.0 for m in range(1, 8)})
    verts = rateregion.corner_points_all(zero)
    yield "degenerate region", len(verts) == 1 and _close(verts[0], [0, 0, 0])


def _paired_reference() -> PureState:
    a1 = qstate.random_pure([2, 2], ["A1", "R1"], seed=11)
    a2 = qstate.random_pure([2, 2], ["A2", "R2"], seed=12)
    s = tensor(a1, a2)
    # fuse R1 R2 into a single reference system
    amps = s.amplitudes.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(-1)
    return PureState(amps, (2, 2, 4), ("A1", "A2", "R"))


# decouple -----------------------------------------------------------------

def _decouple_checks():
    s = tensor(bell(("A", "R")), _zero_ket("B"))
    cfg = decouple.DecouplingTrialConfig(s, ["A"], ["R"], d_a1=2, samples=30, seed=1)
    u = qstate.haar_unitary(2, 3)
    yield "trivial A2", _close(decouple.decoupling_trial(cfg, u), 0.0)
    prod = tensor(bell(("A", "B")), _zero_ket("R"))
    cfg = decouple.DecouplingTrialConfig(prod, ["A"], ["R"], d_a1=1, samples=30, seed=1)
    yield "already decoupled", _close(decouple.decoupling_trial(cfg, np.eye(2)), 0.0)
    big = qstate.random_pure([4, 2], ["A", "R"], seed=4)
    cfg = decouple.DecouplingTrialConfig(big, ["A"], ["R"], d_a1=4, samples=30, seed=2)
    rep = decouple.decoupling_mc(cfg)
    yield "send everything", _close(rep.mean_sq_td, 0.0) and _close(rep.rhs_bound, 2 / 4)
    chain = decouple.fqsw_chain_sim(prod, [["A"]], [], ["R"], [0], [0], samples=30, seed=1)
    yield "sender product with reference", chain.steps[0].report.mean_sq_td < 1e-9
    chain = decouple.fqsw_chain_sim(s, [["A"]], ["B"], ["R"], [0], [1], samples=30, seed=1)
    yield "Bell pair fully sent", chain.steps[0].report.mean_sq_td < 1e-20
    uncor = tensor(_zero_ket("A"), bell(("B", "C")))
    yield "pure uncorrelated A", _close(decouple.blackhole_threshold(uncor, "A"), 0.0)


# rescalc ------------------------------------------------------------------

def _rescalc_checks():
    tp = rescalc.builtin("tp")
    yield "zero-scaled composition", rescalc.compose(tp, rescalc.scale(rescalc.builtin("sc"), 0)).isclose(tp)
    two = rescalc.scale(tp, 2)
    yield "scaled teleportation", two.lhs.isclose(rescalc.ResourceExpr({"ebit": 2, "cc_channel": 4})) \
        and two.rhs.isclose(rescalc.ResourceExpr({"qq_channel": 2}))
    zero = rescalc.scale(tp, 0)
    yield "zero scale empties both sides", not zero.lhs.weights and not zero.rhs.weights


CHECKS: dict[str, list[Callable]] = {
    "qstate": [_qstate_checks],
    "entropy": [_qstate_checks, _entropy_checks],
    "classical": [_classical_checks],
    "squashed": [_squashed_checks],
    "rateregion": [_region_checks],
    "decouple": [_decouple_checks],
    "rescalc": [_rescalc_checks],
}


def run(module: str) -> list[tuple[str, bool]]:
    """Evaluate every check for ``module``; exceptions count as failures."""
    results = []
    for gen in CHECKS[module]:
        try:
            for name, ok in gen():
                results.append((name, bool(ok)))
        except Exception as exc:  # noqa: BLE001 - any crash is a failed check
            results.append((f"{gen.__name__} raised {type(exc).__name__}: {exc}", False))
    return results
