"""Entropies and information quantities, all in bits.

Subsystem arguments are labels: a single ``str`` or any iterable of them.
An empty label collection stands for the trivial system, whose entropy is
zero, so ``cond_entropy(s, A, ())`` is just ``H(A)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError, InvariantError, LabelError
from .qstate import (
    Labels,
    State,
    ZERO_EIGENVALUE,
    reduced_spectrum,
    trace_distance,
)

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class Distribution:
    """Probability vector, optionally reshaped as a joint over several variables.

    ``shape`` lists the alphabet sizes of a joint distribution in C order;
    ``probs`` is always the flat vector.
    """

    probs: np.ndarray
    shape: tuple[int, ...] | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise InvariantError("empty distribution")
        if np.any(p < 0):
            raise InvariantError(f"negative probability {p.min()!r}")
        if abs(p.sum() - 1.0) > NORMALIZATION_TOL:
            raise InvariantError(f"probabilities sum to {p.sum()!r}, expected 1")
        shape = None if self.shape is None else tuple(int(k) for k in self.shape)
        if shape is not None and int(np.prod(shape)) != p.size:
            raise InvariantError(f"joint shape {shape} does not match {p.size} entries")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def joint(cls, table) -> "Distribution":
        arr = np.asarray(table, dtype=float)
        return cls(arr.reshape(-1), arr.shape)

    @property
    def table(self) -> np.ndarray:
        return self.probs.reshape(self.shape if self.shape else (-1,))

    def marginal(self, keep: Iterable[int]) -> "Distribution":
        keep = sorted(set(keep))
        n = len(self.shape or (self.probs.size,))
        drop = tuple(i for i in range(n) if i not in keep)
        t = self.table.sum(axis=drop) if drop else self.table
        return Distribution(t.reshape(-1), t.shape)


def as_distribution(p) -> Distribution:
    return p if isinstance(p, Distribution) else Distribution(np.asarray(p, dtype=float))


def _entropy_of_spectrum(values: np.ndarray) -> float:
    v = values[values > ZERO_EIGENVALUE]
    return float(max(0.0, -np.sum(v * np.log2(v))))


def shannon(p) -> float:
    """``H(X) = -sum p log2 p`` with ``0 log 0 = 0``."""
    return _entropy_of_spectrum(as_distribution(p).probs)


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy argument {x} outside [0, 1]")
    return shannon([x, 1.0 - x])


@dataclass(frozen=True)
class PartyPartition:
    """Ordered disjoint label groups, plus an optional conditioning group."""

    parts: tuple[tuple[str, ...], ...]
    condition: tuple[str, ...] = field(default=())

    def __post_init__(self):
        parts = tuple(_as_labels(p) for p in self.parts)
        cond = _as_labels(self.condition)
        seen: set[str] = set()
        for p in parts + (cond,):
            if seen & set(p):
                raise LabelError(f"groups overlap on {sorted(seen & set(p))}")
            seen |= set(p)
        if any(not p for p in parts):
            raise LabelError("every party needs at least one label")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "condition", cond)

    def __len__(self) -> int:
        return len(self.parts)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for p in self.parts for lab in p)


def _as_labels(x: Labels | None) -> tuple[str, ...]:
    if x is None:
        return ()
    if isinstance(x, str):
        return (x,)
    return tuple(x)


def _disjoint(*groups: tuple[str, ...]) -> None:
    seen: set[str] = set()
    for g in groups:
        if seen & set(g):
            raise LabelError(f"subsystem groups overlap on {sorted(seen & set(g))}")
        seen |= set(g)


def _H(s: State, labels: tuple[str, ...]) -> float:
    if not labels:
        return 0.0
    return _entropy_of_spectrum(reduced_spectrum(s, labels))


def von_neumann(s: State, subset: Labels) -> float:
    """``H(A) = -Tr rho_A log2 rho_A`` for the reduced state on ``subset``."""
    subset = _as_labels(subset)
    if not subset:
        raise LabelError("entropy needs a nonempty subset")
    return _H(s, subset)


def cond_entropy(s: State, a: Labels, b: Labels) -> float:
    """``H(A|B) = H(AB) - H(B)``; negative values signal entanglement."""
    a, b = _as_labels(a), _as_labels(b)
    _disjoint(a, b)
    return _H(s, a + b) - _H(s, b)


def mutual_info(s: State, a: Labels, b: Labels) -> float:
    """``I(A;B) = H(A) + H(B) - H(AB)``."""
    a, b = _as_labels(a), _as_labels(b)
    _disjoint(a, b)
    return _H(s, a) + _H(s, b) - _H(s, a + b)


def cond_mutual_info(s: State, a: Labels, b: Labels, c: Labels) -> float:
    """``I(A;B|C) = H(AC) + H(BC) - H(C) - H(ABC)``."""
    a, b, c = _as_labels(a), _as_labels(b), _as_labels(c)
    _disjoint(a, b, c)
    return _H(s, a + c) + _H(s, b + c) - _H(s, c) - _H(s, a + b + c)


def _as_partition(parts, condition=None) -> PartyPartition:
    if isinstance(parts, PartyPartition):
        if condition is None:
            return parts
        return PartyPartition(parts.parts, _as_labels(condition))
    return PartyPartition(tuple(_as_labels(p) for p in parts), _as_labels(condition))


def multiparty_info(s: State, parts) -> float:
    """``I(X1;...;Xm) = sum_i H(Xi) - H(X1...Xm)``.

    ``parts`` is a :class:`PartyPartition` or a sequence of label groups.
    """
    part = _as_partition(parts)
    if len(part) < 2:
        raise DomainError("multiparty information needs at least two parties")
    return sum(_H(s, p) for p in part.parts) - _H(s, part.labels)


def cond_multiparty_info(s: State, parts, e: Labels | None = None) -> float:
    """``I(X1;...;Xm|E) = sum_i H(Xi E) - H(X1...Xm E) - (m-1) H(E)``.

    When ``parts`` is a :class:`PartyPartition` carrying a condition and
    ``e`` is omitted, that condition is used.
    """
    part = _as_partition(parts, e)
    if len(part) < 2:
        raise DomainError("multiparty information needs at least two parties")
    cond = part.condition
    m = len(part)
    return (sum(_H(s, p + cond) for p in part.parts)
            - _H(s, part.labels + cond) - (m - 1) * _H(s, cond))


@dataclass(frozen=True)
class ContinuityReport:
    lhs: float
    bound: float
    epsilon: float
    holds: bool


def af_conditional_continuity_check(rho: State, sigma: State, a: Labels,
                                    b: Labels) -> ContinuityReport:
    """Compare ``|H(A|B)_rho - H(A|B)_sigma|`` with ``4 eps log2 d_A + 2 h(eps)``.

    ``eps`` is the normalized distance ``Tr|rho - sigma| / 2``.
    """
    if rho.dims != sigma.dims or rho.labels != sigma.labels:
        raise DimensionError("states must share dims and labels")
    a, b = _as_labels(a), _as_labels(b)
    eps = min(1.0, 0.5 * trace_distance(rho, sigma))
    lhs = abs(cond_entropy(rho, a, b) - cond_entropy(sigma, a, b))
    d_a = rho.dims_of(a)
    bound = 4 * eps * np.log2(d_a) + 2 * binary_entropy(eps)
    return ContinuityReport(lhs=lhs, bound=float(bound), epsilon=eps, holds=lhs <= bound + 1e-9)


def entropy_vector(s: State, groups: Sequence[Labels]) -> dict[frozenset[int], float]:
    """Entropies ``H(G_K)`` for every nonempty subset ``K`` of the label groups."""
    groups = [_as_labels(g) for g in groups]
    out = {}
    m = len(groups)
    for mask in range(1, 1 << m):
        key = frozenset(i for i in range(m) if mask >> i & 1)
        out[key] = _H(s, tuple(lab for i in sorted(key) for lab in groups[i]))
    return out
