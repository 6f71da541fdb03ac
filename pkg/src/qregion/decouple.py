"""Monte Carlo checks of one-shot decoupling and the sequential FQSW chain.

A sender holding ``A^S = A1 A2`` applies a Haar-random unitary and ships
``A1``.  She has succeeded when what stays behind, ``A2``, is close to
maximally mixed and uncorrelated with the reference.  The residual

    || sigma^{A2 R}(U) - 1/d_{A2} (x) sigma^R ||_1^2

(unnormalized trace norm) is averaged over Haar samples and compared with
``(d_{A^S} d_R / d_{A1}^2) Tr[(psi^{A^S R})^2]``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .entropy import _as_labels, mutual_info, von_neumann
from .errors import CapacityError, DimensionError, DomainError, InvariantError, LabelError
from .qstate import PureState, State, UnitaryMatrix, clip_spectrum, haar_unitary

CHAIN_MAX_DIM = 2**10


def _factor(s: State, first: tuple[str, ...], second: tuple[str, ...]) -> np.ndarray:
    """Matrix ``K`` with ``K K^dagger`` the state on ``first + second`` in that order."""
    pos = [s.labels.index(lab) for lab in first + second]
    rest = [i for i in range(s.n_systems) if i not in pos]
    d = int(np.prod([s.dims[i] for i in pos]))
    if isinstance(s, PureState):
        return s.amplitudes.reshape(s.dims).transpose(pos + rest).reshape(d, -1)
    n = s.n_systems
    t = s.matrix.reshape(s.dims * 2)
    t = t.transpose(pos + rest + [n + i for i in pos] + [n + i for i in rest])
    dr = s.dim // d
    rho = np.einsum("ijkj->ik", t.reshape(d, dr, d, dr))
    evals, evecs = np.linalg.eigh(rho)
    evals = clip_spectrum(evals)
    keep = evals > 1e-14
    return evecs[:, keep] * np.sqrt(evals[keep])[None, :]


@dataclass
class DecouplingTrialConfig:
    """Sender system ``a_labels`` (split as ``A1 A2``) against reference ``r_labels``.

    Any other subsystem of ``state`` is traced out.
    """

    state: State
    a_labels: Sequence[str]
    r_labels: Sequence[str]
    d_a1: int
    samples: int = 200
    seed: int | None = None

    def __post_init__(self):
        self.a_labels = _as_labels(self.a_labels)
        self.r_labels = _as_labels(self.r_labels)
        both = self.a_labels + self.r_labels
        if len(set(both)) != len(both):
            raise LabelError("sender and reference labels overlap")
        self.state.positions(both)
        self.d_as = self.state.dims_of(self.a_labels)
        self.d_r = self.state.dims_of(self.r_labels) if self.r_labels else 1
        if self.d_a1 < 1 or self.d_as % self.d_a1:
            raise InvariantError(f"d_A1={self.d_a1} does not divide d_A^S={self.d_as}")
        self.d_a2 = self.d_as // self.d_a1
        self._k = _factor(self.state, self.a_labels, self.r_labels)
        rho = self._k @ self._k.conj().T
        self.purity = float(np.real(np.vdot(rho, rho)))
        k3 = self._k.reshape(self.d_as, self.d_r, -1)
        self.sigma_r = np.einsum("arj,asj->rs", k3, k3.conj())

    @property
    def rhs_bound(self) -> float:
        return self.d_as * self.d_r / self.d_a1**2 * self.purity


@dataclass
class DecouplingReport:
    d_as: int
    d_r: int
    d_a1: int
    samples: int
    mean_sq_td: float
    max_sq_td: float
    stderr: float
    rhs_bound: float
    holds: bool
    values: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("values")
        return out


def decoupling_trial(cfg: DecouplingTrialConfig, u: UnitaryMatrix | np.ndarray) -> float:
    """Squared trace norm of the decoupling residual for one unitary."""
    mat = u.matrix if isinstance(u, UnitaryMatrix) else np.asarray(u)
    if mat.shape != (cfg.d_as, cfg.d_as):
        raise DimensionError(f"unitary of dimension {mat.shape[0]} on A^S of dimension {cfg.d_as}")
    k = cfg._k.reshape(cfg.d_as, -1)
    rotated = (mat @ k).reshape(cfg.d_a1, cfg.d_a2 * cfg.d_r, -1)
    n = rotated.transpose(1, 0, 2).reshape(cfg.d_a2 * cfg.d_r, -1)
    sigma = n @ n.conj().T
    target = np.kron(np.eye(cfg.d_a2) / cfg.d_a2, cfg.sigma_r)
    diff = sigma - target
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))))) ** 2


def decoupling_mc(cfg: DecouplingTrialConfig, threads: int = 1) -> DecouplingReport:
    """Haar average of :func:`decoupling_trial` against the one-shot bound.

    ``holds`` compares the sample mean with the bound plus three standard
    errors.  Every sample draws from its own spawned RNG stream, so the
    result does not depend on ``threads``.
    """
    if cfg.samples < 30:
        raise DomainError(f"need at least 30 samples, got {cfg.samples}")
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.samples)

    def one(stream):
        return decoupling_trial(cfg, haar_unitary(cfg.d_as, np.random.default_rng(stream)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, streams))
    else:
        values = [one(st) for st in streams]
    arr = np.array(values)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size))
    bound = cfg.rhs_bound
    return DecouplingReport(
        d_as=cfg.d_as, d_r=cfg.d_r, d_a1=cfg.d_a1, samples=cfg.samples,
        mean_sq_td=mean, max_sq_td=float(arr.max()), stderr=stderr,
        rhs_bound=bound, holds=mean <= bound + 3 * stderr, values=values,
    )


def sweep_csv(reports: Sequence[DecouplingReport]) -> str:
    """CSV table with columns ``d_A1, mean_sq_td, rhs_bound, stderr``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d_A1", "mean_sq_td", "rhs_bound", "stderr"])
    for r in reports:
        w.writerow([r.d_a1, f"{r.mean_sq_td:.9f}", f"{r.rhs_bound:.9f}", f"{r.stderr:.9f}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# FQSW rates and chains


def fqsw_min_rate(s: State, sender, peers_after, ref) -> float:
    """``1/2 I(A_i ; A_{K_i} R)``: qubits sender ``i`` must send per copy."""
    sender = _as_labels(sender)
    others = _as_labels(peers_after) + _as_labels(ref)
    return 0.5 * mutual_info(s, sender, others)


@dataclass
class ChainStep:
    sender: tuple[str, ...]
    peers_after: tuple[str, ...]
    min_rate: float
    threshold_qubits: int
    qubits_sent: int
    report: DecouplingReport

    @property
    def at_or_above(self) -> bool:
        return self.qubits_sent >= self.threshold_qubits

    def to_dict(self) -> dict:
        return {
            "sender": list(self.sender),
            "peers_after": list(self.peers_after),
            "min_rate": self.min_rate,
            "threshold_qubits": self.threshold_qubits,
            "qubits_sent": self.qubits_sent,
            "at_or_above": self.at_or_above,
            **{k: v for k, v in self.report.to_dict().items()
               if k in ("mean_sq_td", "max_sq_td", "stderr", "rhs_bound")},
        }


@dataclass
class ChainReport:
    permutation: tuple[int, ...]
    steps: list[ChainStep]

    @property
    def chained_residual(self) -> float:
        """Sum of per-step root-mean-square residuals (triangle inequality)."""
        return float(sum(math.sqrt(st.report.mean_sq_td) for st in self.steps))

    @property
    def chained_bound(self) -> float:
        return float(sum(math.sqrt(st.report.rhs_bound) for st in self.steps))

    @property
    def separation_margin(self) -> float | None:
        """Smallest residual below threshold minus largest residual at/above it."""
        above = [st.report.mean_sq_td for st in self.steps if st.at_or_above]
        below = [st.report.mean_sq_td for st in self.steps if not st.at_or_above]
        if not above or not below:
            return None
        return min(below) - max(above)

    def to_dict(self) -> dict:
        return {
            "permutation": list(self.permutation),
            "steps": [st.to_dict() for st in self.steps],
            "chained_residual": self.chained_residual,
            "chained_bound": self.chained_bound,
            "separation_margin": self.separation_margin,
        }


def fqsw_chain_sim(s: State, senders: Sequence, receiver, ref, pi: Sequence[int],
                   qubits_sent: Sequence[int], samples: int = 200, seed=None,
                   threads: int = 1) -> ChainReport:
    """Per-step decoupling along the sending order ``pi``.

    Step ``i`` is sender ``pi[i]``: the parties after it in ``pi`` together
    with ``ref`` form its reference, and earlier senders plus ``receiver``
    are already with the decoder and drop out.  ``qubits_sent[j]`` is the
    number of qubits sender ``j`` ships (``d_A1 = 2**qubits``).
    """
    groups = [_as_labels(g) for g in senders]
    ref = _as_labels(ref)
    receiver = _as_labels(receiver)
    flat = [lab for g in groups for lab in g] + list(ref) + list(receiver)
    if len(set(flat)) != len(flat):
        raise LabelError("sender, receiver and reference labels overlap")
    s.positions(flat)
    if s.dim > CHAIN_MAX_DIM:
        raise CapacityError(f"chain simulation supports total dimension <= {CHAIN_MAX_DIM}")
    pi = [int(x) for x in pi]
    if sorted(pi) != list(range(len(groups))):
        raise InvariantError(f"{pi} is not a permutation of the senders")
    if len(qubits_sent) != len(groups):
        raise InvariantError("need one qubit count per sender")
    seeds = np.random.SeedSequence(seed).spawn(len(groups))
    steps = []
    for pos, j in enumerate(pi):
        after = tuple(lab for k in pi[pos + 1:] for lab in groups[k])
        d_a = s.dims_of(groups[j])
        q = int(qubits_sent[j])
        if d_a & (d_a - 1):
            raise InvariantError(f"sender {groups[j]} has dimension {d_a}, not a power of two")
        if not 0 <= q <= int(math.log2(d_a)):
            raise DomainError(f"sender {groups[j]} cannot send {q} qubits from dimension {d_a}")
        rate = fqsw_min_rate(s, groups[j], after, ref)
        cfg = DecouplingTrialConfig(s, groups[j], after + ref, 2**q, samples,
                                    int(seeds[pos].generate_state(1)[0]))
        steps.append(ChainStep(
            sender=groups[j], peers_after=after, min_rate=rate,
            threshold_qubits=math.ceil(rate - 1e-9), qubits_sent=q,
            report=decoupling_mc(cfg, threads=threads),
        ))
    return ChainReport(tuple(pi), steps)


# ---------------------------------------------------------------------------
# black holes


def blackhole_threshold(s: State, a, mode: str = "simple", *, b=None, b2=None,
                        lost=None) -> float:
    """Radiation (qubits) needed before the purification of ``A`` escapes.

    ``simple``: ``1/2 I(A;B)`` with ``B`` the labels given (default: all
    others), which equals ``H(A)`` for a pure ``A B1`` pair.
    ``lost``: ``max{H(A), H(A) + 1/2 I(B2;L)}`` for a black hole whose part
    ``L`` never radiates.
    """
    a = _as_labels(a)
    if mode == "simple":
        b = tuple(lab for lab in s.labels if lab not in a) if b is None else _as_labels(b)
        if not b:
            return 0.0
        return 0.5 * mutual_info(s, a, b)
    if mode == "lost":
        if b2 is None or lost is None:
            raise DomainError("lost mode needs both b2 and lost labels")
        b2, lost = _as_labels(b2), _as_labels(lost)
        h_a = von_neumann(s, a)
        return max(h_a, h_a + 0.5 * mutual_info(s, b2, lost))
    raise DomainError(f"unknown mode {mode!r}; expected 'simple' or 'lost'")
