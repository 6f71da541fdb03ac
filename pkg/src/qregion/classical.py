"""Typical sets, the AEP, Schumacher projector statistics and Slepian-Wolf constants.

Typical-set mass and cardinality are computed exactly by summing over type
classes: the probability of a sequence depends only on its symbol counts,
so each type contributes ``multinomial(n; counts)`` sequences of identical
probability.  Sums are accumulated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import gammaln, logsumexp

from .entropy import Distribution, as_distribution, shannon
from .errors import CapacityError, DomainError, InvariantError
from .rateregion import SetFunction

LN2 = math.log(2.0)
TYPICALITY_SLACK = 1e-12

# (support size, max n); larger supports are admitted while the number of
# type classes stays within that of the ternary limit.
_CAPACITY = {1: None, 2: 60, 3: 30}
_MAX_TYPES = math.comb(30 + 2, 2)


@dataclass(frozen=True)
class TypicalReport:
    n: int
    epsilon: float
    entropy: float
    mass: float
    tail: float
    log_count: float
    bound_log_count: float

    @property
    def rate(self) -> float:
        """``log2 |T| / n``."""
        return self.log_count / self.n


def _compositions(n: int, k: int):
    """All nonnegative integer vectors of length ``k`` summing to ``n``."""
    for bars in combinations(range(n + k - 1), k - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(n + k - 2 - prev)
        yield out


def _check_capacity(k: int, n: int) -> None:
    if k in _CAPACITY:
        limit = _CAPACITY[k]
        if limit is not None and n > limit:
            raise CapacityError(f"support size {k} admits n <= {limit}, got n={n}")
        return
    if math.comb(n + k - 1, k - 1) > _MAX_TYPES:
        raise CapacityError(f"{math.comb(n + k - 1, k - 1)} type classes exceed the limit {_MAX_TYPES}")


def typical_stats(p, n: int, epsilon: float) -> TypicalReport:
    """Exact probability and size of the entropy-typical set.

    A sequence ``x^n`` is typical when
    ``2^{-n(H+eps)} <= p(x^n) <= 2^{-n(H-eps)}``.
    """
    dist = as_distribution(p)
    if n < 1:
        raise DomainError(f"block length must be >= 1, got {n}")
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    h = shannon(dist)
    support = dist.probs[dist.probs > 0]
    k = support.size
    _check_capacity(k, n)
    log2p = np.log2(support)

    typ_lc, typ_lm, atyp_lm = [], [], []
    for counts in _compositions(n, k):
        c = np.asarray(counts, dtype=float)
        # natural-log multinomial coefficient
        log_mult = gammaln(n + 1) - np.sum(gammaln(c + 1))
        log2_seq = float(c @ log2p)
        rate = -log2_seq / n
        log_mass = log_mult + log2_seq * LN2
        if abs(rate - h) <= epsilon + TYPICALITY_SLACK:
            typ_lc.append(log_mult)
            typ_lm.append(log_mass)
        else:
            atyp_lm.append(log_mass)

    mass = float(np.exp(logsumexp(typ_lm))) if typ_lm else 0.0
    tail = float(np.exp(logsumexp(atyp_lm))) if atyp_lm else 0.0
    log_count = float(logsumexp(typ_lc) / LN2) if typ_lc else -math.inf
    return TypicalReport(
        n=n,
        epsilon=epsilon,
        entropy=h,
        mass=min(1.0, mass),
        tail=min(1.0, tail),
        log_count=log_count,
        bound_log_count=n * (h + epsilon),
    )


def aep_tail(p, n: int, epsilon: float) -> float:
    """``Pr(|-(1/n) log2 p(X^n) - H| > eps)``, the complement of the typical mass."""
    return typical_stats(p, n, epsilon).tail


def schumacher_rate_demo(eigvals, n: int, epsilon: float) -> TypicalReport:
    """Typical-projector statistics for ``rho^{(x)n}``.

    The typical projector is diagonal in the eigenbasis of ``rho^{(x)n}``;
    its trace is the typical-set size of the spectrum and ``Tr[rho^n Pi]``
    is the typical mass, so the computation reduces to :func:`typical_stats`.
    """
    spec = np.clip(np.asarray(eigvals, dtype=float), 0.0, None)
    return typical_stats(Distribution(spec), n, epsilon)


def classical_sw_setfunction(joint) -> SetFunction:
    """``f(K) = H(X_K | X_{K^c})`` for every nonempty ``K``.

    ``joint`` is a :class:`Distribution` with a joint ``shape`` or an
    ``m``-dimensional probability table.
    """
    dist = joint if isinstance(joint, Distribution) else Distribution.joint(joint)
    if dist.shape is None:
        raise InvariantError("joint distribution needs a shape with one axis per variable")
    m = len(dist.shape)
    if not 1 <= m <= 6:
        raise CapacityError(f"Slepian-Wolf constants support 1..6 variables, got {m}")
    h_all = shannon(dist)
    values = {}
    for mask in range(1, 1 << m):
        k = frozenset(i for i in range(m) if mask >> i & 1)
        rest = [i for i in range(m) if i not in k]
        h_rest = shannon(dist.marginal(rest)) if rest else 0.0
        values[k] = h_all - h_rest
    f = SetFunction(m, values)
    ok, margin, pair = f.superadditivity_check()
    if not ok:
        raise InvariantError(f"classical constants not supermodular at {pair} (margin {margin:.3e})")
    return f
