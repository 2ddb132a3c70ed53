"""Random generators for verification: Haar unitaries, states, POVMs, channels."""

from __future__ import annotations

import numpy as np

from .linalg import dagger


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rows: int, cols: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-distributed U(d) element: QR of a Ginibre matrix with R's diagonal phases removed."""
    q, r = np.linalg.qr(ginibre(d, d, rng))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def monomial_unitary(d: int, rng=None) -> np.ndarray:
    """Random permutation matrix times random diagonal phases."""
    rng = rng_from(rng)
    perm = rng.permutation(d)
    u = np.zeros((d, d), dtype=complex)
    u[perm, np.arange(d)] = np.exp(2j * np.pi * rng.random(d))
    return u


def haar_pure_state(d: int, rng=None) -> np.ndarray:
    v = ginibre(d, 1, rng)[:, 0]
    return v / np.linalg.norm(v)


def random_density_matrix(d: int, rng=None, rank: int | None = None) -> np.ndarray:
    g = ginibre(d, d if rank is None else rank, rng)
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_povm(d: int, outcomes: int, rng=None) -> list[np.ndarray]:
    """Gaussian PSD elements renormalised by S^{-1/2} (.) S^{-1/2}, S their sum."""
    rng = rng_from(rng)
    raw = []
    for _ in range(outcomes):
        g = ginibre(d, d, rng)
        raw.append(g @ dagger(g))
    w, v = np.linalg.eigh(sum(raw))
    s = (v / np.sqrt(w)) @ dagger(v)
    return [s @ a @ s for a in raw]


def random_kraus(d_in: int, d_out: int, n_ops: int, rng=None) -> list[np.ndarray]:
    """Kraus operators of a random channel, from a random isometry C^d_in -> C^(n d_out)."""
    g = ginibre(n_ops * d_out, d_in, rng)
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return [q[k * d_out:(k + 1) * d_out, :] for k in range(n_ops)]


def random_hermitian(d: int, rng=None) -> np.ndarray:
    g = ginibre(d, d, rng)
    h = (g + dagger(g)) / 2
    return h / np.linalg.norm(h)
