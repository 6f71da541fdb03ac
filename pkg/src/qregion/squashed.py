"""Multiparty squashed entanglement: closed forms and numerical upper bounds.

``E_sq(X1;...;Xm) = 1/2 inf_E I(X1;...;Xm|E)`` over all extensions of the
state.  Every extension is obtained by applying a channel to a purifying
system ``R``, so the search runs over Stinespring isometries
``V : R -> E (x) F`` with ``F`` discarded.  Any value returned by
:func:`esq_optimize` is an *upper bound at extension dimension d_E*, never
the infimum itself: the true optimum may need a larger ``E``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .entropy import PartyPartition, _as_partition, cond_multiparty_info, multiparty_info
from .errors import CapacityError, DomainError, InvariantError, LabelError
from .qstate import (
    MAX_DIM,
    MultipartiteState,
    PureState,
    State,
    haar_unitary,
    partial_trace,
    purify,
    reduced_spectrum,
    separable,
    tensor_all,
)

PURITY_TOL = 1e-9
EXT_LABEL = "E"
ENV_LABEL = "F"
REF_LABEL = "R~"


@dataclass
class ExtensionChannel:
    """Isometry ``V = expm(G) @ base`` from ``R`` to ``E (x) F``.

    ``G = X base^dagger - base X^dagger`` is anti-Hermitian, with the complex
    ``D x d_R`` matrix ``X`` unpacked from ``isometry_params``.  Zero
    parameters reproduce ``base``, which is how warm starts are expressed.
    """

    d_R: int
    d_E: int
    d_F: int
    isometry_params: np.ndarray
    base: np.ndarray

    @property
    def padded_dim(self) -> int:
        return self.d_E * self.d_F

    @property
    def n_params(self) -> int:
        return 2 * self.padded_dim * self.d_R

    def isometry(self) -> np.ndarray:
        return _isometry(self.base, self.isometry_params)

    def embed(self, d_E: int, d_F: int) -> "ExtensionChannel":
        """Same channel viewed with larger ``E`` and ``F`` (zero padding)."""
        if d_E < self.d_E or d_F < self.d_F:
            raise DomainError("can only embed into larger systems")
        v = self.isometry().reshape(self.d_E, self.d_F, self.d_R)
        padded = np.zeros((d_E, d_F, self.d_R), dtype=complex)
        padded[: self.d_E, : self.d_F] = v
        base = padded.reshape(d_E * d_F, self.d_R)
        return ExtensionChannel(self.d_R, d_E, d_F, np.zeros(2 * d_E * d_F * self.d_R), base)


def _isometry(base: np.ndarray, params: np.ndarray) -> np.ndarray:
    if not np.any(params):
        return base
    d, r = base.shape
    x = (params[: d * r] + 1j * params[d * r:]).reshape(d, r)
    gen = x @ base.conj().T
    gen = gen - gen.conj().T
    return expm(gen) @ base


def trivial_base(d_R: int, d_E: int, d_F: int) -> np.ndarray:
    """Isometry sending ``R`` into ``F`` and leaving ``E`` in ``|0>``."""
    if d_F < d_R:
        raise DomainError(f"environment dimension {d_F} cannot hold reference of dimension {d_R}")
    v = np.zeros((d_E, d_F, d_R), dtype=complex)
    v[0, :d_R, :] = np.eye(d_R)
    return v.reshape(d_E * d_F, d_R)


@dataclass
class EsqResult:
    upper_bound: float
    extension: ExtensionChannel
    restarts_used: int
    converged: bool
    d_E: int
    history: list[float] = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"upper bound at extension dimension d_E={self.d_E}"


# ---------------------------------------------------------------------------
# closed forms


def _check_parts_cover(s: State, part: PartyPartition) -> None:
    if set(part.labels) != set(s.labels):
        raise LabelError(f"parties {part.labels} must cover exactly the state's labels {s.labels}")


def esq_pure(s: State, parts) -> float:
    """``1/2 I(X1;...;Xm)``, the squashed entanglement of a pure state."""
    part = _as_partition(parts)
    _check_parts_cover(s, part)
    if s.purity() < 1 - PURITY_TOL:
        raise InvariantError(f"state is not pure (purity {s.purity():.12f})")
    return 0.5 * multiparty_info(s, part)


def _is_product(member: State, part: PartyPartition) -> bool:
    return all(np.sum(reduced_spectrum(member, p) ** 2) >= 1 - PURITY_TOL for p in part.parts)


def flagged_extension(ensemble: Sequence[tuple[float, State]], parts,
                      label: str = EXT_LABEL) -> MultipartiteState:
    """``sum_j p_j |psi_j><psi_j| (x) |j><j|_E`` for a product-state ensemble."""
    part = _as_partition(parts)
    members = []
    for j, (p, member) in enumerate(ensemble):
        if not isinstance(member, PureState):
            raise InvariantError(f"ensemble member {j} must be a pure state")
        _check_parts_cover(member, part)
        if not _is_product(member, part):
            raise InvariantError(f"ensemble member {j} is not a product across the parties")
        members.append((p, member))
    j_dim = len(members)
    flagged = []
    for j, (p, member) in enumerate(members):
        flag = np.zeros(j_dim, dtype=complex)
        flag[j] = 1.0
        flagged.append((p, tensor_all([member, PureState(flag, (j_dim,), (label,))])))
    return separable(flagged)


def esq_flag_upper(ensemble: Sequence[tuple[float, State]], parts) -> float:
    """``1/2 I(X1;...;Xm|E)`` on the extension recording the ensemble index.

    Conditioned on the flag every member is a pure product, so the value is
    zero up to rounding: separable states carry no squashed entanglement.
    """
    part = _as_partition(parts)
    ext = flagged_extension(ensemble, part)
    return 0.5 * cond_multiparty_info(ext, part, EXT_LABEL)


# ---------------------------------------------------------------------------
# numerical search


class _Objective:
    """``1/2 I(X1;...;Xm|E)`` as a function of the isometry.

    The extended ket on ``X E F`` is pure, so each needed entropy is read
    off the smaller Gram matrix of a bipartition; the index permutations
    are prepared once.
    """

    def __init__(self, s: State, part: PartyPartition):
        self.part = PartyPartition(part.parts, (EXT_LABEL,))
        self.purified = purify(s, REF_LABEL, minimal=True)
        self.d_R = self.purified.dims[-1]
        # amplitudes as a d_X x d_R matrix
        self.psi = self.purified.amplitudes.reshape(-1, self.d_R)
        self.dims = s.dims
        self.labels = s.labels
        self._plans: dict = {}

    def extended_ket(self, v: np.ndarray, d_E: int, d_F: int) -> PureState:
        amps = (self.psi @ v.T).reshape(-1)
        return PureState._trusted(amps, self.dims + (d_E, d_F), self.labels + (EXT_LABEL, ENV_LABEL))

    def _plan(self, d_E: int, d_F: int):
        key = (d_E, d_F)
        if key not in self._plans:
            dims = self.dims + (d_E, d_F)
            n = len(dims)
            e = n - 2
            groups = [tuple(self.labels.index(lab) for lab in p) for p in self.part.parts]
            x_all = tuple(sorted(i for g in groups for i in g))
            # (coefficient, kept positions)
            terms = [(1.0, tuple(sorted(g + (e,)))) for g in groups]
            terms += [(-1.0, x_all + (e,)), (-(len(groups) - 1.0), (e,))]
            plan = []
            for coef, keep in terms:
                rest = tuple(i for i in range(n) if i not in keep)
                dk = int(np.prod([dims[i] for i in keep]))
                plan.append((coef, keep + rest, dk))
            self._plans[key] = (dims, plan)
        return self._plans[key]

    def value(self, v: np.ndarray, d_E: int, d_F: int) -> float:
        dims, plan = self._plan(d_E, d_F)
        t = (self.psi @ v.T).reshape(dims)
        total = 0.0
        for coef, perm, dk in plan:
            m = t.transpose(perm).reshape(dk, -1)
            gram = m @ m.conj().T if dk <= m.shape[1] else m.conj().T @ m
            lam = np.linalg.eigvalsh(gram)
            lam = lam[lam > 1e-12]
            total -= coef * float(np.sum(lam * np.log2(lam)))
        return 0.5 * total


def extension_state(s: State, parts, channel: ExtensionChannel) -> MultipartiteState:
    """Realized extension ``rho~`` on the state's systems plus ``E``."""
    obj = _Objective(s, _as_partition(parts))
    if channel.d_R != obj.d_R:
        raise DomainError(f"channel input dimension {channel.d_R} != reference dimension {obj.d_R}")
    ket = obj.extended_ket(channel.isometry(), channel.d_E, channel.d_F)
    return partial_trace(ket, s.labels + (EXT_LABEL,))


def extension_value(s: State, parts, channel: ExtensionChannel) -> float:
    """``1/2 I(X1;...;Xm|E)`` evaluated on a given extension channel."""
    obj = _Objective(s, _as_partition(parts))
    return obj.value(channel.isometry(), channel.d_E, channel.d_F)


def flag_channel(ensemble: Sequence[tuple[float, State]], d_E: int | None = None) -> ExtensionChannel:
    """The index-recording extension of a separable mixture, as a channel on ``R``.

    The mixture is purified exactly as :func:`esq_optimize` does.  The map
    ``W : R -> J`` carrying that purification to ``sum_j sqrt(p_j)|psi_j>|j>``
    is followed by ``|j> -> |j>_E |j>_F``.
    """
    rho = separable(ensemble)
    pur = purify(rho, REF_LABEL, minimal=True)
    d_R = pur.dims[-1]
    psi = pur.amplitudes.reshape(-1, d_R)            # columns sqrt(lambda_k) |e_k>
    lam = np.sum(np.abs(psi) ** 2, axis=0)
    vs = np.array([np.sqrt(p) * m.amplitudes for p, m in ensemble]).T  # d_X x J
    j_dim = vs.shape[1]
    # W|k> = sum_j <e_k|v_j> / sqrt(lambda_k) |j>  with <e_k| = psi[:,k]^dagger / sqrt(lambda_k)
    w = (psi.conj().T @ vs).T / lam[None, :]
    flag = np.zeros((j_dim, j_dim, j_dim), dtype=complex)
    for j in range(j_dim):
        flag[j, j, j] = 1.0
    v = flag.reshape(j_dim * j_dim, j_dim) @ w
    ch = ExtensionChannel(d_R, j_dim, j_dim, np.zeros(2 * j_dim * j_dim * d_R), v)
    if d_E is not None and d_E > j_dim:
        ch = ch.embed(d_E, j_dim)
    return ch


def _run_restart(obj: _Objective, base: np.ndarray, d_E: int, d_F: int, tol: float,
                 maxfev: int, step: float) -> tuple[float, np.ndarray, bool]:
    n = 2 * base.size

    def f(theta):
        return obj.value(_isometry(base, theta), d_E, d_F)

    x0 = np.zeros(n)
    simplex = np.vstack([x0, x0 + step * np.eye(n)])
    res = minimize(f, x0, method="Nelder-Mead",
                   options={"xatol": tol, "fatol": tol, "maxfev": maxfev,
                            "initial_simplex": simplex, "adaptive": n > 10})
    f0 = f(x0)
    if f0 <= res.fun:
        return f0, x0, bool(res.success)
    return float(res.fun), np.asarray(res.x), bool(res.success)


def esq_optimize(s: State, parts, d_E: int | None = None, restarts: int = 16,
                 tol: float = 1e-7, seed=None, *, d_F: int | None = None,
                 warm_start: ExtensionChannel | None = None, maxfev: int | None = None,
                 step: float = 0.3, threads: int = 1) -> EsqResult:
    """Upper bound on ``E_sq`` from extensions of dimension at most ``d_E``.

    Restart 0 starts from ``warm_start`` (embedded into the requested
    dimensions) or from the trivial extension; every further restart starts
    from a Haar-random isometry.  Each restart is a Nelder-Mead search that
    stops once simplex size and value spread fall below ``tol``, or after
    ``maxfev`` evaluations (then ``converged`` is False).
    """
    part = _as_partition(parts)
    _check_parts_cover(s, part)
    if len(part) < 2:
        raise DomainError("need at least two parties")
    d_E = s.dim if d_E is None else int(d_E)
    if d_E < 1:
        raise DomainError(f"extension dimension must be >= 1, got {d_E}")
    if restarts < 1:
        raise DomainError("need at least one restart")
    obj = _Objective(s, part)
    d_R = obj.d_R
    d_F = d_R if d_F is None else int(d_F)
    if warm_start is not None:
        if warm_start.d_R != d_R:
            raise DomainError(f"warm start acts on dimension {warm_start.d_R}, reference has {d_R}")
        d_F = max(d_F, warm_start.d_F)
    if s.dim * d_E * d_F > MAX_DIM * 4 or s.dim * d_E > MAX_DIM:
        raise CapacityError(f"extended system of dimension {s.dim * d_E * d_F} is too large")
    maxfev = maxfev or max(2000, 100 * 2 * d_E * d_F * d_R)

    bases = []
    if warm_start is not None:
        bases.append(warm_start.embed(max(d_E, warm_start.d_E), d_F).isometry())
        d_E = max(d_E, warm_start.d_E)
    else:
        bases.append(trivial_base(d_R, d_E, d_F))
    streams = np.random.SeedSequence(seed).spawn(restarts)
    for r in range(1, restarts):
        u = haar_unitary(d_E * d_F, np.random.default_rng(streams[r])).matrix
        bases.append(u[:, :d_R])

    def job(base):
        return _run_restart(obj, base, d_E, d_F, tol, maxfev, step)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(job, bases))
    else:
        outcomes = [job(b) for b in bases]

    history = [val for val, _, _ in outcomes]
    best = int(np.argmin(history))
    val, theta, ok = outcomes[best]
    channel = ExtensionChannel(d_R, d_E, d_F, theta, bases[best])
    return EsqResult(upper_bound=val, extension=channel,
                     restarts_used=restarts, converged=ok, d_E=d_E, history=history)
