"""Resource inequalities as formal weighted bundles of communication resources.

Coefficients are numbers of bits, qubits or ebits per copy of the input
state.  Asymptotic slack terms (``+ delta``) are taken to zero; each
builtin inequality keeps a ``note`` recording that it holds for any
``delta > 0`` in the limit.

Opaque tokens (states, channels, state transfers) are compared by name
only, so two tokens cancel exactly when their names agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .entropy import _H, _as_labels, cond_entropy, mutual_info, von_neumann
from .errors import DomainError, InvariantError, LabelError
from .qstate import State, purify

EBIT = "ebit"
QQ = "qq_channel"
CC = "cc_channel"
_SYMBOLS = {EBIT: "[qq]", QQ: "[q→q]", CC: "[c→c]"}
_ORDER = {EBIT: 1, QQ: 2, CC: 3}
ZERO_WEIGHT = 1e-15

BUILTINS = ("tp", "sc", "mother", "father", "fqsw", "schumacher", "merging")
ENTROPIC = ("mother", "father", "fqsw", "schumacher", "merging")


def _sort_key(token: str):
    return (_ORDER.get(token, 0), token)


@dataclass(frozen=True)
class ResourceExpr:
    """Weighted multiset of resource tokens; zero weights are dropped."""

    weights: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for tok, w in dict(self.weights).items():
            w = float(w)
            if not math.isfinite(w):
                raise InvariantError(f"weight of {tok!r} is not finite")
            if w < 0:
                raise InvariantError(f"weight of {tok!r} is negative ({w})")
            if w > ZERO_WEIGHT:
                clean[str(tok)] = w
        object.__setattr__(self, "weights", dict(sorted(clean.items(), key=lambda kv: _sort_key(kv[0]))))

    def __getitem__(self, token: str) -> float:
        return self.weights.get(token, 0.0)

    def __add__(self, other: "ResourceExpr") -> "ResourceExpr":
        out = dict(self.weights)
        for tok, w in other.weights.items():
            out[tok] = out.get(tok, 0.0) + w
        return ResourceExpr(out)

    def scaled(self, c: float) -> "ResourceExpr":
        return ResourceExpr({t: c * w for t, w in self.weights.items()})

    def isclose(self, other: "ResourceExpr", tol: float = 1e-9) -> bool:
        keys = set(self.weights) | set(other.weights)
        return all(abs(self[k] - other[k]) <= tol for k in keys)

    def __str__(self) -> str:
        if not self.weights:
            return "0"
        return " + ".join(f"{w:.3f} {_SYMBOLS.get(t, t)}" for t, w in self.weights.items())


@dataclass(frozen=True)
class ResourceInequality:
    """``lhs >= rhs``: the left bundle can simulate the right one."""

    lhs: ResourceExpr
    rhs: ResourceExpr
    name: str = ""
    note: str = ""

    def yield_of(self, token: str) -> float:
        """Net amount of ``token`` produced (rhs weight minus lhs weight)."""
        return self.rhs[token] - self.lhs[token]

    def cost_of(self, token: str) -> float:
        """Net amount of ``token`` consumed (lhs weight minus rhs weight)."""
        return -self.yield_of(token)

    def isclose(self, other: "ResourceInequality", tol: float = 1e-9) -> bool:
        return self.lhs.isclose(other.lhs, tol) and self.rhs.isclose(other.rhs, tol)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": dict(self.lhs.weights),
                "rhs": dict(self.rhs.weights), "note": self.note}

    def __str__(self) -> str:
        return f"{self.lhs} ≥ {self.rhs}"


def _cancel(lhs: ResourceExpr, rhs: ResourceExpr) -> tuple[ResourceExpr, ResourceExpr]:
    left, right = dict(lhs.weights), dict(rhs.weights)
    for tok in set(left) & set(right):
        m = min(left[tok], right[tok])
        left[tok] -= m
        right[tok] -= m
    return ResourceExpr(left), ResourceExpr(right)


def compose(a: ResourceInequality, b: ResourceInequality, name: str | None = None) -> ResourceInequality:
    """Add two inequalities side by side and cancel tokens present on both sides."""
    lhs, rhs = _cancel(a.lhs + b.lhs, a.rhs + b.rhs)
    notes = "; ".join(n for n in (a.note, b.note) if n)
    return ResourceInequality(lhs, rhs, name or f"{a.name}+{b.name}", notes)


def scale(a: ResourceInequality, c: float) -> ResourceInequality:
    """Multiply every weight by ``c >= 0``."""
    c = float(c)
    if not math.isfinite(c) or c < 0:
        raise DomainError(f"scale factor must be a nonnegative real, got {c}")
    return ResourceInequality(a.lhs.scaled(c), a.rhs.scaled(c), a.name, a.note)


# ---------------------------------------------------------------------------
# builtin catalog

_SLACK = "coefficients are limits: holds with any delta > 0 added to the costs"


def _roles(s: State, roles: Mapping[str, object] | None) -> tuple[State, dict[str, tuple[str, ...]]]:
    """Resolve the A/B/R role labels, purifying ``s`` when no reference is given."""
    roles = {k: _as_labels(v) for k, v in (roles or {}).items()}
    unknown = set(roles) - {"A", "B", "R"}
    if unknown:
        raise LabelError(f"unknown roles {sorted(unknown)}; expected A, B, R")
    labels = list(s.labels)
    a = roles.get("A") or (labels[0],)
    if "B" in roles:
        b = roles["B"]
    else:
        left = [lab for lab in labels if lab not in a]
        if not left:
            raise LabelError("state has no subsystem left for role B")
        b = (left[0],)
    if "R" in roles:
        r = roles["R"]
    else:
        r = tuple(lab for lab in labels if lab not in a + b)
    if not r:
        ref = "R"
        while ref in labels:
            ref += "'"
        s = purify(s, ref, minimal=True)
        r = (ref,)
    s.positions(a + b + r)
    seen = a + b + r
    if len(set(seen)) != len(seen):
        raise LabelError("role labels overlap")
    return s, {"A": a, "B": b, "R": r}


def _name(lab: tuple[str, ...]) -> str:
    return "".join(lab)


def builtin(name: str, s: State | None = None, roles: Mapping[str, object] | None = None) -> ResourceInequality:
    """One of ``tp, sc, mother, father, fqsw, schumacher, merging``.

    Entropic coefficients are evaluated on ``s`` with roles ``A`` (sender),
    ``B`` (receiver) and ``R`` (reference).  Unspecified roles default to
    the first, second and remaining labels; with nothing left for ``R`` the
    state is purified.  For ``father`` the ``A``/``B``/``R`` roles play
    channel input reference ``R``, output ``B`` and environment ``E = A``.
    """
    key = name.lower()
    if key == "tp":
        return ResourceInequality(ResourceExpr({EBIT: 1, CC: 2}), ResourceExpr({QQ: 1}), "TP")
    if key == "sc":
        return ResourceInequality(ResourceExpr({EBIT: 1, QQ: 1}), ResourceExpr({CC: 2}), "SC")
    if key not in ENTROPIC:
        raise DomainError(f"unknown builtin {name!r}; expected one of {', '.join(BUILTINS)}")
    if s is None:
        raise DomainError(f"builtin {name!r} needs a state for its entropic coefficients")
    s, r = _roles(s, roles)
    a, b, ref = r["A"], r["B"], r["R"]
    na, nb, nr = _name(a), _name(b), _name(ref)
    if key == "mother":
        return ResourceInequality(
            ResourceExpr({f"⟨ρ^{na}{nb}⟩": 1, QQ: 0.5 * mutual_info(s, a, ref)}),
            ResourceExpr({EBIT: 0.5 * mutual_info(s, a, b)}), "mother", _SLACK)
    if key == "father":
        # channel N: R is the input purification, B the output and A the environment
        return ResourceInequality(
            ResourceExpr({f"⟨N^{nr}→{nb}⟩": 1, EBIT: 0.5 * mutual_info(s, ref, a)}),
            ResourceExpr({QQ: 0.5 * mutual_info(s, ref, b)}), "father", _SLACK)
    if key == "fqsw":
        return ResourceInequality(
            ResourceExpr({f"⟨U^S→{na}{nb}:φ^S⟩": 1, QQ: 0.5 * mutual_info(s, a, ref)}),
            ResourceExpr({EBIT: 0.5 * mutual_info(s, a, b), f"⟨id^S→{nb}^:φ^S⟩": 1}),
            "FQSW", _SLACK)
    if key == "schumacher":
        return ResourceInequality(
            ResourceExpr({QQ: von_neumann(s, a)}),
            ResourceExpr({f"⟨id^{na}→{nb}:ρ^{na}⟩": 1}), "Schumacher", _SLACK)
    h = cond_entropy(s, a, b)
    lhs = {f"⟨U^S→{na}{nb}:ρ^S⟩": 1}
    rhs = {f"⟨id^S→{nb}:ρ^S⟩": 1}
    # a negative conditional entropy is a yield of ebits rather than a cost
    if h >= 0:
        lhs[QQ] = h
    else:
        rhs[EBIT] = -h
    return ResourceInequality(ResourceExpr(lhs), ResourceExpr(rhs), "merging",
                              _SLACK + "; free classical communication")


# ---------------------------------------------------------------------------
# derived identities


@dataclass(frozen=True)
class IdentityReport:
    identity: str
    derived: float
    expected: float
    residual: float
    holds: bool
    derivation: ResourceInequality


def hashing(s: State, roles=None) -> ResourceInequality:
    """Mother plus ``1/2 I(A;R)`` teleportations: the hashing inequality."""
    s, r = _roles(s, roles)
    tp = scale(builtin("tp"), 0.5 * mutual_info(s, r["A"], r["R"]))
    return compose(builtin("mother", s, r), tp, "hashing")


def fqsw_merging(s: State, roles=None) -> ResourceInequality:
    """FQSW plus ``1/2 I(A;R)`` teleportations: state merging."""
    s, r = _roles(s, roles)
    tp = scale(builtin("tp"), 0.5 * mutual_info(s, r["A"], r["R"]))
    return compose(builtin("fqsw", s, r), tp, "merging")


def verify_identity(s: State, identity: str, roles=None, tol: float = 1e-9) -> IdentityReport:
    """Check a derived ebit coefficient against its entropic closed form.

    ``hashing``: yield equals ``H(B) - H(AB)``.
    ``merging``: ebit cost equals ``H(A|B)``.
    """
    s, r = _roles(s, roles)
    a, b = r["A"], r["B"]
    key = identity.lower().removesuffix("_coeff")
    if key == "hashing":
        inq = hashing(s, r)
        derived = inq.yield_of(EBIT)
        expected = _H(s, b) - _H(s, a + b)
    elif key == "merging":
        inq = fqsw_merging(s, r)
        derived = inq.cost_of(EBIT)
        expected = cond_entropy(s, a, b)
    else:
        raise DomainError(f"unknown identity {identity!r}; expected 'hashing' or 'merging'")
    res = abs(derived - expected)
    return IdentityReport(key, derived, expected, res, res <= tol, inq)


def coherent_information(s: State, a, b) -> float:
    """``I_c(A>B) = H(B) - H(AB)``."""
    a, b = _as_labels(a), _as_labels(b)
    return _H(s, b) - _H(s, a + b)


__all__ = [
    "CC", "EBIT", "QQ", "BUILTINS", "IdentityReport", "ResourceExpr", "ResourceInequality",
    "builtin", "coherent_information", "compose", "fqsw_merging", "hashing", "scale",
    "verify_identity",
]
