"""Dense multipartite quantum states and the linear algebra around them.

Two carriers are used throughout the package:

* :class:`MultipartiteState` -- a density matrix with labeled subsystems.
* :class:`PureState` -- a ket with labeled subsystems.

Both are immutable.  Functions in this module and in :mod:`qregion.entropy`
accept either; pure states take cheaper code paths (Schmidt decompositions
instead of full density matrices) whenever that is possible.

Conventions
-----------
Logarithms are base 2.  The trace distance is the *unnormalized* one,
``Tr|rho - sigma|``, so it ranges over ``[0, 2]``.  Many texts put a factor
1/2 in front; :func:`trace_distance` does not.  The fidelity is the squared
form ``F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.
"""

from __future__ import annotations

import string
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    CapacityError,
    DimensionError,
    DomainError,
    InvariantError,
    LabelError,
    StateFormatError,
)

MAX_DIM = 2**12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
UNITARY_TOL = 1e-9
ZERO_EIGENVALUE = 1e-12

Labels = Union[str, Iterable[str]]


def _default_labels(n: int) -> tuple[str, ...]:
    if n <= 26:
        return tuple(string.ascii_uppercase[:n])
    return tuple(f"S{i}" for i in range(n))


def _check_layout(dims, labels) -> tuple[tuple[int, ...], tuple[str, ...]]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise DimensionError("at least one subsystem is required")
    if any(d < 1 for d in dims):
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    labels = _default_labels(len(dims)) if labels is None else tuple(str(x) for x in labels)
    if len(labels) != len(dims):
        raise LabelError(f"{len(labels)} labels given for {len(dims)} subsystems")
    if len(set(labels)) != len(labels):
        raise LabelError(f"duplicate labels in {labels}")
    total = int(np.prod(dims))
    if total > MAX_DIM:
        raise CapacityError(f"total dimension {total} exceeds the dense limit {MAX_DIM}")
    return dims, labels


def clip_spectrum(eigvals: np.ndarray, tol: float = POSITIVITY_TOL) -> np.ndarray:
    """Clip tiny negative eigenvalues to zero; reject anything more negative."""
    eigvals = np.asarray(eigvals, dtype=float)
    if eigvals.size and eigvals.min() < -tol:
        raise InvariantError(f"eigenvalue {eigvals.min():.3e} below -{tol:g}")
    return np.clip(eigvals, 0.0, None)


class _Labeled:
    """Shared label bookkeeping for states."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_systems(self) -> int:
        return len(self.dims)

    def positions(self, labels: Labels) -> tuple[int, ...]:
        """Positions of ``labels`` in subsystem order (sorted, duplicates rejected)."""
        if isinstance(labels, str):
            labels = (labels,)
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise LabelError(f"repeated label in {labels}")
        try:
            pos = [self.labels.index(lab) for lab in labels]
        except ValueError:
            unknown = [lab for lab in labels if lab not in self.labels]
            raise LabelError(f"unknown label(s) {unknown}; state has {self.labels}") from None
        return tuple(sorted(pos))

    def dims_of(self, labels: Labels) -> int:
        return int(np.prod([self.dims[p] for p in self.positions(labels)], dtype=int))

    def _spectrum_cache(self) -> dict:
        return self._cache  # type: ignore[attr-defined]


class MultipartiteState(_Labeled):
    """Density operator on a labeled tensor product of subsystems.

    Parameters
    ----------
    matrix : array_like
        Square complex matrix of side ``prod(dims)``.
    dims : sequence of int
        Subsystem dimensions, in tensor order.
    labels : sequence of str, optional
        Distinct subsystem names; defaults to ``A, B, C, ...``.
    """

    def __init__(self, matrix, dims: Sequence[int], labels: Sequence[str] | None = None,
                 *, check: bool = True):
        self.dims, self.labels = _check_layout(dims, labels)
        mat = np.array(matrix, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise DimensionError(f"matrix shape {mat.shape} does not match dims {self.dims}")
        if check:
            herm_err = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
            if herm_err > HERMITIAN_TOL:
                raise InvariantError(f"matrix is not Hermitian (max deviation {herm_err:.3e})")
            tr = np.trace(mat).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise InvariantError(f"trace is {tr!r}, expected 1")
            clip_spectrum(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T)))
        mat.setflags(write=False)
        self.matrix = mat
        self._cache: dict = {}

    @classmethod
    def _trusted(cls, matrix, dims, labels) -> "MultipartiteState":
        return cls(matrix, dims, labels, check=False)

    def __repr__(self) -> str:
        return f"MultipartiteState(dims={self.dims}, labels={self.labels})"

    def eigenvalues(self) -> np.ndarray:
        """Clipped spectrum of the full density matrix, ascending."""
        key = ("spec", tuple(range(self.n_systems)))
        if key not in self._cache:
            self._cache[key] = clip_spectrum(np.linalg.eigvalsh(self.matrix))
        return self._cache[key]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def relabel(self, labels: Sequence[str]) -> "MultipartiteState":
        return MultipartiteState._trusted(self.matrix, self.dims, labels)

    def density(self) -> "MultipartiteState":
        return self


class PureState(_Labeled):
    """Unit-norm ket on a labeled tensor product of subsystems."""

    def __init__(self, amplitudes, dims: Sequence[int], labels: Sequence[str] | None = None,
                 *, check: bool = True):
        self.dims, self.labels = _check_layout(dims, labels)
        vec = np.array(amplitudes, dtype=complex).reshape(-1)
        if vec.size != self.dim:
            raise DimensionError(f"{vec.size} amplitudes do not match dims {self.dims}")
        if check:
            norm = np.linalg.norm(vec)
            if abs(norm - 1.0) > HERMITIAN_TOL:
                raise InvariantError(f"ket norm is {norm!r}, expected 1")
        vec.setflags(write=False)
        self.amplitudes = vec
        self._cache: dict = {}

    @classmethod
    def _trusted(cls, amplitudes, dims, labels) -> "PureState":
        return cls(amplitudes, dims, labels, check=False)

    def __repr__(self) -> str:
        return f"PureState(dims={self.dims}, labels={self.labels})"

    def density(self) -> MultipartiteState:
        psi = self.amplitudes
        return MultipartiteState._trusted(np.outer(psi, psi.conj()), self.dims, self.labels)

    @property
    def matrix(self) -> np.ndarray:
        return self.density().matrix

    def eigenvalues(self) -> np.ndarray:
        spec = np.zeros(self.dim)
        spec[-1] = 1.0
        return spec

    def purity(self) -> float:
        return 1.0

    def relabel(self, labels: Sequence[str]) -> "PureState":
        return PureState._trusted(self.amplitudes, self.dims, labels)


State = Union[MultipartiteState, PureState]


class UnitaryMatrix:
    """Square unitary matrix; ``U^dagger U = 1`` is checked at construction."""

    def __init__(self, matrix, *, check: bool = True):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"unitary must be square, got shape {mat.shape}")
        if check:
            err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
            if err > UNITARY_TOL:
                raise InvariantError(f"matrix is not unitary (deviation {err:.3e})")
        mat.setflags(write=False)
        self.matrix = mat

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other):
        if isinstance(other, UnitaryMatrix):
            return UnitaryMatrix(self.matrix @ other.matrix, check=False)
        return self.matrix @ other


# ---------------------------------------------------------------------------
# operations


def tensor(a: State, b: State) -> State:
    """Tensor product; labels and dims are concatenated ``a`` first."""
    clash = set(a.labels) & set(b.labels)
    if clash:
        raise LabelError(f"labels {sorted(clash)} appear in both factors")
    dims = a.dims + b.dims
    labels = a.labels + b.labels
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState._trusted(np.kron(a.amplitudes, b.amplitudes), dims, labels)
    return MultipartiteState._trusted(np.kron(a.density().matrix, b.density().matrix), dims, labels)


def tensor_all(states: Sequence[State]) -> State:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def _ket_factor(s: PureState, keep: Sequence[int]) -> np.ndarray:
    """Matrix ``M`` with ``M @ M^dagger`` equal to the reduced state on ``keep``."""
    n = s.n_systems
    rest = [p for p in range(n) if p not in keep]
    psi = s.amplitudes.reshape(s.dims).transpose(list(keep) + rest)
    dk = int(np.prod([s.dims[p] for p in keep], dtype=int))
    return psi.reshape(dk, -1)


def _reduce_matrix(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    n = len(dims)
    rest = [p for p in range(n) if p not in keep]
    dk = int(np.prod([dims[p] for p in keep], dtype=int))
    dr = int(np.prod([dims[p] for p in rest], dtype=int))
    t = mat.reshape(tuple(dims) * 2)
    t = t.transpose(list(keep) + rest + [n + p for p in keep] + [n + p for p in rest])
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("ijkj->ik", t)


def partial_trace(s: State, keep: Labels) -> MultipartiteState:
    """Reduced state on ``keep``; kept subsystems retain their original order."""
    pos = s.positions(keep)
    if not pos:
        raise LabelError("keep must name at least one subsystem")
    dims = tuple(s.dims[p] for p in pos)
    labels = tuple(s.labels[p] for p in pos)
    if isinstance(s, PureState):
        m = _ket_factor(s, pos)
        return MultipartiteState._trusted(m @ m.conj().T, dims, labels)
    if len(pos) == s.n_systems:
        return s
    return MultipartiteState._trusted(_reduce_matrix(s.matrix, s.dims, pos), dims, labels)


def reduced_spectrum(s: State, labels: Labels) -> np.ndarray:
    """Clipped eigenvalues of the reduced state on ``labels`` (cached per state)."""
    pos = s.positions(labels)
    if not pos:
        raise LabelError("subset must be nonempty")
    cache = s._spectrum_cache()
    key = ("spec", pos)
    if key in cache:
        return cache[key]
    if isinstance(s, PureState):
        m = _ket_factor(s, pos)
        # the smaller Gram matrix carries the same nonzero spectrum
        gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.conj().T @ m
        spec = np.linalg.eigvalsh(gram)
    elif len(pos) == s.n_systems:
        spec = np.linalg.eigvalsh(s.matrix)
    else:
        spec = np.linalg.eigvalsh(_reduce_matrix(s.matrix, s.dims, pos))
    spec = clip_spectrum(spec)
    cache[key] = spec
    return spec


def purify(s: State, ref_label: str = "R", *, minimal: bool = False) -> PureState:
    """Purification with the reference system appended last.

    The reference has the full dimension of ``s`` unless ``minimal`` is set,
    in which case it has the dimension of the support (eigenvalues above
    ``1e-12``).  A :class:`PureState` input is returned with a
    one-dimensional reference, since its rank is known without detection.
    """
    if ref_label in s.labels:
        raise LabelError(f"reference label {ref_label!r} already in use")
    labels = s.labels + (ref_label,)
    if isinstance(s, PureState):
        return PureState._trusted(s.amplitudes, s.dims + (1,), labels)
    evals, evecs = np.linalg.eigh(s.matrix)
    evals = clip_spectrum(evals)
    if minimal:
        support = evals > ZERO_EIGENVALUE
        evals, evecs = evals[support], evecs[:, support]
    d_ref = evals.size
    # |psi> = sum_k sqrt(lambda_k) |e_k> |k>
    psi = (evecs * np.sqrt(evals)[None, :]).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return PureState._trusted(psi, s.dims + (d_ref,), labels)


def haar_unitary(d: int, seed=None) -> UnitaryMatrix:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts, including
    an existing ``Generator`` (which is advanced).
    """
    if int(d) < 1:
        raise DomainError(f"unitary dimension must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return UnitaryMatrix(q * phases[None, :], check=False)


def _same_layout(a: State, b: State) -> None:
    if a.dims != b.dims:
        raise DimensionError(f"dimension mismatch: {a.dims} vs {b.dims}")


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(mat)
    evals = clip_spectrum(evals)
    return (evecs * np.sqrt(evals)[None, :]) @ evecs.conj().T


def fidelity(rho: State, sigma: State) -> float:
    """Squared fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Evaluated as the squared nuclear norm of ``sqrt(rho) sqrt(sigma)``,
    which is the same quantity written symmetrically.
    """
    _same_layout(rho, sigma)
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        return float(min(1.0, abs(np.vdot(rho.amplitudes, sigma.amplitudes)) ** 2))
    if isinstance(rho, PureState) or isinstance(sigma, PureState):
        ket, mixed = (rho, sigma) if isinstance(rho, PureState) else (sigma, rho)
        psi = ket.amplitudes
        return float(np.clip(np.real(psi.conj() @ mixed.matrix @ psi), 0.0, 1.0))
    sv = np.linalg.svd(_psd_sqrt(rho.matrix) @ _psd_sqrt(sigma.matrix), compute_uv=False)
    return float(np.clip(np.sum(sv) ** 2, 0.0, 1.0))


def trace_distance(rho: State, sigma: State) -> float:
    """Unnormalized trace distance ``Tr|rho - sigma|`` in ``[0, 2]``."""
    _same_layout(rho, sigma)
    diff = rho.density().matrix - sigma.density().matrix
    return float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


# ---------------------------------------------------------------------------
# named states


def basis_ket(bits: str, dims: Sequence[int] | None = None) -> np.ndarray:
    dims = [2] * len(bits) if dims is None else list(dims)
    idx = int(np.ravel_multi_index([int(b) for b in bits], dims))
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[idx] = 1.0
    return v


def bell(labels: Sequence[str] = ("A", "B")) -> PureState:
    """``(|00> + |11>)/sqrt(2)``."""
    return PureState((basis_ket("00") + basis_ket("11")) / np.sqrt(2), (2, 2), labels)


def _check_qubits(m: int) -> None:
    if m > MAX_DIM.bit_length() - 1:
        raise CapacityError(f"{m} qubits exceed the dense limit {MAX_DIM}")


def ghz(m: int, labels: Sequence[str] | None = None) -> PureState:
    """``(|0...0> + |1...1>)/sqrt(2)`` on ``m`` qubits labeled ``X1..Xm``."""
    if m < 2:
        raise DomainError(f"GHZ needs m >= 2, got {m}")
    _check_qubits(m)
    labels = tuple(f"X{i + 1}" for i in range(m)) if labels is None else labels
    amps = (basis_ket("0" * m) + basis_ket("1" * m)) / np.sqrt(2)
    return PureState(amps, (2,) * m, labels)


def w_state(m: int, labels: Sequence[str] | None = None) -> PureState:
    """Equal superposition of the ``m`` weight-one strings."""
    if m < 2:
        raise DomainError(f"W needs m >= 2, got {m}")
    _check_qubits(m)
    labels = tuple(f"X{i + 1}" for i in range(m)) if labels is None else labels
    amps = sum(basis_ket("0" * i + "1" + "0" * (m - i - 1)) for i in range(m)) / np.sqrt(m)
    return PureState(amps, (2,) * m, labels)


def product_bell_pairs(k: int) -> PureState:
    """``k`` Bell pairs ordered ``A1 B1 A2 B2 ...``."""
    if k < 1:
        raise DomainError("need at least one pair")
    _check_qubits(2 * k)
    pairs = [bell((f"A{i + 1}", f"B{i + 1}")) for i in range(k)]
    return tensor_all(pairs)


def ket(amplitudes, dims=None, labels=None) -> PureState:
    """Normalize ``amplitudes`` into a :class:`PureState`."""
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    dims = (v.size,) if dims is None else dims
    return PureState(v / np.linalg.norm(v), dims, labels)


def separable(ensemble: Sequence[tuple[float, State]]) -> MultipartiteState:
    """Mixture ``sum_j p_j |psi_j><psi_j|`` of states sharing one layout."""
    if not ensemble:
        raise InvariantError("empty ensemble")
    probs = np.array([float(p) for p, _ in ensemble])
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > TRACE_TOL:
        raise InvariantError(f"ensemble probabilities {probs} are not a distribution")
    first = ensemble[0][1]
    mat = np.zeros((first.dim, first.dim), dtype=complex)
    for p, member in ensemble:
        if member.dims != first.dims:
            raise InvariantError("ensemble members have different layouts")
        mat += p * member.density().matrix
    return MultipartiteState(mat, first.dims, first.labels)


def maximally_mixed(d: int, label: str = "A") -> MultipartiteState:
    return MultipartiteState(np.eye(d) / d, (d,), (label,))


def isotropic(visibility: float, labels: Sequence[str] = ("A", "B")) -> MultipartiteState:
    """``v |Phi><Phi| + (1 - v) 1/4`` on two qubits."""
    if not 0.0 <= visibility <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {visibility}")
    phi = bell().density().matrix
    return MultipartiteState(visibility * phi + (1 - visibility) * np.eye(4) / 4, (2, 2), labels)


def build_named_state(kind: str, *args, **kwargs) -> State:
    """Dispatch on ``kind`` in {bell, ghz, w, separable, product_bell_pairs}."""
    builders = {
        "bell": bell,
        "ghz": ghz,
        "w": w_state,
        "separable": separable,
        "product_bell_pairs": product_bell_pairs,
    }
    try:
        return builders[kind](*args, **kwargs)
    except KeyError:
        raise DomainError(f"unknown state kind {kind!r}") from None


# ---------------------------------------------------------------------------
# random states (testing and Monte Carlo)


def random_pure(dims: Sequence[int], labels=None, seed=None) -> PureState:
    rng = np.random.default_rng(seed)
    d = int(np.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(v / np.linalg.norm(v), dims, labels)


def random_density(dims: Sequence[int], labels=None, rank: int | None = None,
                   seed=None) -> MultipartiteState:
    """Induced-measure random density matrix of the given rank (full by default)."""
    rng = np.random.default_rng(seed)
    d = int(np.prod(dims))
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return MultipartiteState(0.5 * (rho + rho.conj().T), dims, labels)


# ---------------------------------------------------------------------------
# JSON


def state_to_json(s: State) -> dict:
    """``{"dims", "labels", "kind": "ket"|"density", "data"}`` with ``[re, im]`` pairs."""
    if isinstance(s, PureState):
        data = [[float(z.real), float(z.imag)] for z in s.amplitudes]
        kind = "ket"
    else:
        data = [[[float(z.real), float(z.imag)] for z in row] for row in s.matrix]
        kind = "density"
    return {"dims": list(s.dims), "labels": list(s.labels), "kind": kind, "data": data}


def _complex_entry(entry, path: str) -> complex:
    if not isinstance(entry, (list, tuple)) or len(entry) != 2:
        raise StateFormatError(f"{path}: expected [re, im] pair, got {entry!r}")
    try:
        return complex(float(entry[0]), float(entry[1]))
    except (TypeError, ValueError):
        raise StateFormatError(f"{path}: non-numeric entry {entry!r}") from None


def state_from_json(obj: dict) -> State:
    """Inverse of :func:`state_to_json`; validation errors name the field path."""
    if not isinstance(obj, dict):
        raise StateFormatError("$: expected an object")
    for key in ("dims", "kind", "data"):
        if key not in obj:
            raise StateFormatError(f"$.{key}: missing field")
    dims = obj["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) and d > 0 for d in dims):
        raise StateFormatError(f"$.dims: expected list of positive integers, got {dims!r}")
    labels = obj.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(dims)):
        raise StateFormatError("$.labels: expected one label per subsystem")
    kind, data = obj["kind"], obj["data"]
    d = int(np.prod(dims))
    if not isinstance(data, list):
        raise StateFormatError("$.data: expected an array")
    if kind == "ket":
        if len(data) != d:
            raise StateFormatError(f"$.data: expected {d} amplitudes, got {len(data)}")
        vec = [_complex_entry(e, f"$.data[{i}]") for i, e in enumerate(data)]
        try:
            return PureState(vec, dims, labels)
        except InvariantError as exc:
            raise StateFormatError(f"$.data: {exc}") from None
    if kind == "density":
        if len(data) != d:
            raise StateFormatError(f"$.data: expected {d} rows, got {len(data)}")
        rows = []
        for i, row in enumerate(data):
            if not isinstance(row, list) or len(row) != d:
                raise StateFormatError(f"$.data[{i}]: expected {d} entries")
            rows.append([_complex_entry(e, f"$.data[{i}][{j}]") for j, e in enumerate(row)])
        try:
            return MultipartiteState(rows, dims, labels)
        except InvariantError as exc:
            raise StateFormatError(f"$.data: {exc}") from None
    raise StateFormatError(f"$.kind: expected 'ket' or 'density', got {kind!r}")
