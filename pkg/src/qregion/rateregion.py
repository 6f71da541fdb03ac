"""Supermodular rate regions ``{Q : sum_{k in K} Q_k >= C_K for all K}``.

Parties are indexed ``0..m-1`` and subsets are ``frozenset`` objects.  The
constants ``C_K`` live in a :class:`SetFunction`; ``C`` of the empty set is
zero.  Two independent routes produce the vertices of a region:

* :func:`corner_points_all` -- telescoping differences of ``C`` along the
  suffix chains of every permutation;
* :func:`vertices_bruteforce` -- solve every linearly independent
  ``m``-subset of constraint hyperplanes and keep the feasible solutions.

For superadditive ``C`` the two sets coincide.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .entropy import _H, _as_labels, multiparty_info
from .errors import CapacityError, InvariantError, LabelError
from .qstate import State, reduced_spectrum

SUPERADDITIVITY_TOL = 1e-9
MEMBERSHIP_TOL = 1e-9
TIGHT_TOL = 1e-8
DEDUP_TOL = 1e-8
RANK_TOL = 1e-10
PURITY_TOL = 1e-9


def _key(subset: Iterable[int]) -> frozenset[int]:
    return frozenset(int(i) for i in subset)


def _mask(k: frozenset[int]) -> int:
    return sum(1 << i for i in k)


class SuperadditivityReport(NamedTuple):
    holds: bool
    worst_margin: float
    worst_pair: tuple[frozenset[int], frozenset[int]] | None


class SetFunction:
    """Constants ``C_K`` for every nonempty subset of ``{0, ..., m-1}``.

    ``exact`` optionally flags, per subset, whether the constant is exact or
    only a bound (used for outer regions built from numerical estimates).
    """

    def __init__(self, m: int, values: Mapping[Iterable[int], float],
                 exact: Mapping[Iterable[int], bool] | None = None):
        if m < 1:
            raise InvariantError("a set function needs at least one party")
        self.m = int(m)
        vals = {_key(k): float(v) for k, v in values.items()}
        vals.pop(frozenset(), None)
        expected = (1 << self.m) - 1
        if len(vals) != expected or any(max(k) >= self.m for k in vals):
            raise InvariantError(f"need values on all {expected} nonempty subsets of {self.m} parties")
        if not all(np.isfinite(v) for v in vals.values()):
            raise InvariantError("set function values must be finite")
        self.values = vals
        self.exact = {k: True for k in vals} if exact is None else {
            _key(k): bool(v) for k, v in exact.items()}
        self._array = np.zeros(1 << self.m)
        for k, v in vals.items():
            self._array[_mask(k)] = v

    def __getitem__(self, subset: Iterable[int]) -> float:
        k = _key(subset)
        return 0.0 if not k else self.values[k]

    def __repr__(self) -> str:
        body = ", ".join(f"{sorted(k)}: {v:.6g}" for k, v in self.items())
        return f"SetFunction(m={self.m}, {{{body}}})"

    def subsets(self) -> list[frozenset[int]]:
        """Nonempty subsets ordered by size, then lexicographically."""
        return sorted(self.values, key=lambda k: (len(k), sorted(k)))

    def items(self):
        return [(k, self.values[k]) for k in self.subsets()]

    def as_array(self) -> np.ndarray:
        """Values indexed by bitmask, entry 0 being the empty set."""
        return self._array.copy()

    def superadditivity_check(self) -> SuperadditivityReport:
        """Worst margin of ``C_{K|L} + C_{K&L} - C_K - C_L`` over all pairs."""
        return superadditivity_check(self)


# ---------------------------------------------------------------------------
# constants from states


def _parts(parts) -> list[tuple[str, ...]]:
    out = [_as_labels(p) for p in parts]
    flat = [lab for p in out for lab in p]
    if len(set(flat)) != len(flat):
        raise LabelError("sender groups overlap")
    return out


def inner_constants(s: State, parts: Sequence, ref="R") -> SetFunction:
    """``C_K = 1/2 [sum_{k in K} H(A_k) + H(R) - H(R A_K)]`` for all ``K``.

    The global state on the senders and ``ref`` must be pure.  Each
    constant is also evaluated as half the multiparty information
    ``I(A_{k1};...;A_{k|K|};R)`` and the two forms must agree within 1e-9.
    """
    groups = _parts(parts)
    ref = _as_labels(ref)
    every = tuple(lab for g in groups for lab in g) + ref
    if set(ref) & set(every[: -len(ref)]):
        raise LabelError("reference overlaps the senders")
    if np.sum(reduced_spectrum(s, every) ** 2) < 1 - PURITY_TOL:
        raise InvariantError("global state on senders and reference is not pure")
    h_ref = _H(s, ref)
    singles = [_H(s, g) for g in groups]
    values = {}
    for size in range(1, len(groups) + 1):
        for k in combinations(range(len(groups)), size):
            joint = tuple(lab for i in k for lab in groups[i]) + ref
            c = 0.5 * (sum(singles[i] for i in k) + h_ref - _H(s, joint))
            alt = 0.5 * multiparty_info(s, [groups[i] for i in k] + [ref])
            if abs(c - alt) > 1e-9:
                raise InvariantError(f"constant forms disagree on {k}: {c} vs {alt}")
            values[frozenset(k)] = c
    return SetFunction(len(groups), values)


def merging_region(s: State, parts: Sequence) -> SetFunction:
    """``f(K) = H(A_K | A_{K^c})`` over the given parties (may be negative)."""
    groups = _parts(parts)
    if len(groups) < 2:
        raise InvariantError("merging region needs at least two parties")
    m = len(groups)

    def joint(idx):
        return tuple(lab for i in idx for lab in groups[i])

    h_all = _H(s, joint(range(m)))
    values = {}
    for mask in range(1, 1 << m):
        k = [i for i in range(m) if mask >> i & 1]
        rest = [i for i in range(m) if not mask >> i & 1]
        values[frozenset(k)] = h_all - _H(s, joint(rest))
    return SetFunction(m, values)


def outer_constants(inner: SetFunction, esq_per_subset: Mapping[Iterable[int], float],
                    exact: Mapping[Iterable[int], bool] | None = None) -> SetFunction:
    """``C'_K = C_K - E_sq(A_K)``; singletons use zero.

    ``exact`` marks which supplied values are exact; subsets not listed
    default to exact.  Missing values for ``|K| >= 2`` raise ``KeyError``.
    """
    esq = {_key(k): float(v) for k, v in esq_per_subset.items()}
    flags = {} if exact is None else {_key(k): bool(v) for k, v in exact.items()}
    values, ex = {}, {}
    for k, c in inner.items():
        if len(k) == 1:
            values[k] = c
            ex[k] = inner.exact[k]
            continue
        if k not in esq:
            raise KeyError(f"no squashed-entanglement value for subset {sorted(k)}")
        values[k] = c - esq[k]
        ex[k] = flags.get(k, True) and inner.exact[k]
    return SetFunction(inner.m, values, ex)


# ---------------------------------------------------------------------------
# geometry


def superadditivity_check(f: SetFunction) -> SuperadditivityReport:
    v = f.as_array()
    masks = np.arange(1 << f.m)
    union = np.bitwise_or.outer(masks, masks)
    inter = np.bitwise_and.outer(masks, masks)
    margin = v[union] + v[inter] - v[:, None] - v[None, :]
    idx = np.unravel_index(np.argmin(margin), margin.shape)
    worst = float(margin[idx])

    def to_set(mask):
        return frozenset(i for i in range(f.m) if mask >> i & 1)

    pair = (to_set(int(idx[0])), to_set(int(idx[1])))
    return SuperadditivityReport(worst >= -SUPERADDITIVITY_TOL, worst, pair)


def _require_superadditive(f: SetFunction) -> None:
    report = superadditivity_check(f)
    if not report.holds:
        k, l = report.worst_pair
        raise InvariantError(
            f"constants are not superadditive at K={sorted(k)}, L={sorted(l)} "
            f"(margin {report.worst_margin:.3e})")


def _corner(f: SetFunction, pi: Sequence[int]) -> np.ndarray:
    m = f.m
    q = np.zeros(m)
    for i in range(m):
        q[pi[i]] = f[pi[i:]] - f[pi[i + 1:]]
    return q


def corner_point(f: SetFunction, pi: Sequence[int]) -> np.ndarray:
    """Rates ``Q_{pi(i)} = C_{pi[i:]} - C_{pi[i+1:]}`` for a permutation ``pi``.

    ``pi[0]`` is the party that sends first: it faces every later party as
    part of its reference.  Each suffix ``pi[i:]`` of the permutation ends
    up tight.
    """
    pi = [int(x) for x in pi]
    if sorted(pi) != list(range(f.m)):
        raise InvariantError(f"{pi} is not a permutation of 0..{f.m - 1}")
    _require_superadditive(f)
    return _corner(f, pi)


def _dedup(points: Iterable[np.ndarray], tol: float = DEDUP_TOL) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - k)) <= tol for k in kept):
            kept.append(p)
    kept.sort(key=lambda p: tuple(np.round(p, 7)))
    return kept


def corner_points_all(f: SetFunction) -> list[np.ndarray]:
    """Distinct corner points over all ``m!`` permutations."""
    if f.m > 7:
        raise CapacityError(f"corner enumeration supports m <= 7, got {f.m}")
    _require_superadditive(f)
    return _dedup(_corner(f, pi) for pi in permutations(range(f.m)))


def _constraint_matrix(f: SetFunction) -> tuple[np.ndarray, np.ndarray, list[frozenset[int]]]:
    subsets = f.subsets()
    a = np.array([[1.0 if i in k else 0.0 for i in range(f.m)] for k in subsets])
    c = np.array([f.values[k] for k in subsets])
    return a, c, subsets


def vertices_bruteforce(f: SetFunction) -> list[np.ndarray]:
    """Vertices from all linearly independent ``m``-subsets of tight constraints."""
    if f.m > 5:
        raise CapacityError(f"brute-force vertex enumeration supports m <= 5, got {f.m}")
    a, c, _ = _constraint_matrix(f)
    combos = np.array(list(combinations(range(len(c)), f.m)), dtype=int)
    systems = a[combos]                      # (n_combos, m, m)
    rhs = c[combos]                          # (n_combos, m)
    sv = np.linalg.svd(systems, compute_uv=False)
    independent = sv[:, -1] > RANK_TOL
    sols = np.linalg.solve(systems[independent], rhs[independent][..., None])[..., 0]
    feasible = np.all(sols @ a.T >= c[None, :] - MEMBERSHIP_TOL, axis=1)
    return _dedup(sols[feasible])


@dataclass
class MembershipReport:
    member: bool
    violated: list[frozenset[int]]
    tight: list[frozenset[int]]
    slack: dict[frozenset[int], float]

    def __bool__(self) -> bool:
        return self.member


def membership(f: SetFunction, q: Sequence[float]) -> MembershipReport:
    """Check ``sum_{k in K} q_k >= C_K - 1e-9`` for every ``K``."""
    q = np.asarray(q, dtype=float)
    if q.shape != (f.m,) or not np.all(np.isfinite(q)):
        raise InvariantError(f"rate tuple must be {f.m} finite numbers")
    slack = {k: float(sum(q[i] for i in k) - c) for k, c in f.items()}
    violated = [k for k, s in slack.items() if s < -MEMBERSHIP_TOL]
    tight = [k for k, s in slack.items() if abs(s) <= TIGHT_TOL]
    return MembershipReport(not violated, violated, tight, slack)


@dataclass
class RegionDescription:
    """H- and V-representations of one region.

    ``cone`` holds the recession directions (the coordinate axes).
    ``exact`` flags which halfspace constants are exact rather than bounds.
    """

    m: int
    h_rep: list[tuple[frozenset[int], float]]
    vertices: list[np.ndarray]
    cone: list[np.ndarray]
    exact: dict[frozenset[int], bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "h_rep": [{"subset": sorted(k), "c": c, "exact": self.exact.get(k, True)}
                      for k, c in self.h_rep],
            "vertices": [[float(x) for x in v] for v in self.vertices],
            "cone": [[float(x) for x in w] for w in self.cone],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"Q{i}" for i in range(self.m)])
        for v in self.vertices:
            writer.writerow([f"{x:.9f}" for x in v])
        return buf.getvalue()


def export_region(f: SetFunction) -> RegionDescription:
    """Both representations; every vertex is checked against every halfspace."""
    vertices = corner_points_all(f)
    for v in vertices:
        report = membership(f, v)
        if not report.member or report.slack and min(report.slack.values()) < -1e-8:
            raise InvariantError(f"vertex {v} violates {report.violated}")
    cone = [np.eye(f.m)[i] for i in range(f.m)]
    return RegionDescription(f.m, f.items(), vertices, cone, dict(f.exact))
