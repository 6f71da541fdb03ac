import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qregion", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qregion")


def ptrace_oracle(mat, dims, keep):
    """Partial trace by explicit index loops; slow but independent of the package."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    out = np.zeros((dk, dk), dtype=complex)
    idx = list(np.ndindex(*dims))
    pos = {ix: i for i, ix in enumerate(idx)}
    for a in idx:
        for b in idx:
            if any(a[i] != b[i] for i in drop):
                continue
            ka = np.ravel_multi_index([a[i] for i in keep], [dims[i] for i in keep]) if keep else 0
            kb = np.ravel_multi_index([b[i] for i in keep], [dims[i] for i in keep]) if keep else 0
            out[ka, kb] += mat[pos[a], pos[b]]
    return out


def entropy_oracle(mat):
    lam = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    lam = lam[lam > 1e-13]
    return float(-np.sum(lam * np.log2(lam)))


def haar_state_matrix(rng, d):
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    z /= np.linalg.norm(z)
    return np.outer(z, z.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
