"""Symmetric subspace of (C^d)^{(x)k}: dimensions, permutations, projectors, bases.

The orthonormal basis is indexed by occupation numbers ``(n_0, ..., n_{d-1})``
with ``sum(n) == k``, listed in lexicographically decreasing order, so for
``k == 1`` it is the computational basis and ``|0...0>`` is always column 0.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import math
from functools import cached_property
from typing import Sequence

import numpy as np

from .config import CAPACITY
from .errors import CapacityError, DimensionError
from .linalg import as_matrix, dagger, partial_trace

_INT64_MAX = 2 ** 63 - 1
# dense projectors are d^k x d^k; keep them well below memory limits
MAX_DENSE_PROJECTOR = 2 ** 12


def sym_dim(d: int, k: int) -> int:
    """binomial(d + k - 1, k), exact."""
    if d < 1 or k < 0:
        raise ValueError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    n = math.comb(d + k - 1, k)
    if n > _INT64_MAX:
        raise CapacityError(f"symmetric dimension for d={d}, k={k} overflows int64")
    return n


def _check_embedded(d: int, k: int, limit: int | None = None) -> int:
    limit = CAPACITY.max_dim if limit is None else limit
    if d ** k > limit:
        raise CapacityError(
            f"(C^{d})^(x){k} has dimension {d ** k} > {limit}; use a smaller N or d")
    return d ** k


@dataclasses.dataclass(frozen=True)
class Permutation:
    """Bijection k -> image[k] on {0, ..., n-1}."""

    image: tuple[int, ...]

    def __post_init__(self):
        image = tuple(int(x) for x in self.image)
        if sorted(image) != list(range(len(image))):
            raise ValueError(f"{self.image} is not a permutation")
        object.__setattr__(self, "image", image)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @property
    def size(self) -> int:
        return len(self.image)

    def __call__(self, k: int) -> int:
        return self.image[k]

    def compose(self, other: "Permutation") -> "Permutation":
        """(self o other)(k) = self(other(k))."""
        return Permutation(tuple(self.image[j] for j in other.image))

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for k, j in enumerate(self.image):
            inv[j] = k
        return Permutation(tuple(inv))


def _multi_indices(d: int, k: int) -> np.ndarray:
    """All k-digit base-d strings, row r being the digits of r (most significant first)."""
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grid = np.indices((d,) * k).reshape(k, -1).T
    return grid.astype(np.int64)


def _flat(digits: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros(digits.shape[0], dtype=np.int64)
    for col in range(digits.shape[1]):
        out = out * d + digits[:, col]
    return out


def _permuted_indices(d: int, perm: Permutation) -> np.ndarray:
    """Flat index of U_pi|i> for every basis index i."""
    digits = _multi_indices(d, perm.size)
    inv = perm.inverse().image
    return _flat(digits[:, list(inv)], d)


def permutation_operator(d: int, perm: Permutation | Sequence[int]) -> np.ndarray:
    """U_pi |i_1 ... i_N> = |i_{pi^-1(1)} ... i_{pi^-1(N)}>: factor k moves to slot pi(k)."""
    if not isinstance(perm, Permutation):
        perm = Permutation(tuple(perm))
    dim = _check_embedded(d, perm.size)
    u = np.zeros((dim, dim), dtype=complex)
    u[_permuted_indices(d, perm), np.arange(dim)] = 1.0
    return u


def occupations(d: int, k: int) -> list[tuple[int, ...]]:
    """Occupation tuples summing to k, lexicographically decreasing."""
    occ = [c for c in itertools.product(range(k, -1, -1), repeat=d) if sum(c) == k]
    return occ


def _symmetric_basis(d: int, k: int) -> np.ndarray:
    dim = _check_embedded(d, k)
    occ = occupations(d, k)
    column = {n: j for j, n in enumerate(occ)}
    digits = _multi_indices(d, k)
    counts = np.stack([(digits == c).sum(axis=1) for c in range(d)], axis=1)
    cols = np.array([column[tuple(row)] for row in counts.tolist()], dtype=np.int64)
    # each state is the uniform superposition over its k!/prod(n_i!) orderings
    norms = np.array([math.factorial(k) // math.prod(math.factorial(x) for x in n)
                      for n in occ], dtype=float)
    basis = np.zeros((dim, len(occ)), dtype=complex)
    basis[np.arange(dim), cols] = 1.0 / np.sqrt(norms[cols])
    return basis


@dataclasses.dataclass(frozen=True, eq=False)
class SymmetricSpace:
    d: int
    k: int
    basis: np.ndarray  # d^k x sym_dim(d, k), orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def embedded_dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def projector(self) -> np.ndarray:
        """(1/k!) sum over S_k of U_pi, built as a permutation sum."""
        dim = _check_embedded(self.d, self.k, MAX_DENSE_PROJECTOR)
        if self.k > CAPACITY.max_perm_copies:
            raise CapacityError(f"{self.k}! permutation terms exceed the configured limit")
        p = np.zeros((dim, dim))
        cols = np.arange(dim)
        for image in itertools.permutations(range(self.k)):
            np.add.at(p, (_permuted_indices(self.d, Permutation(image)), cols), 1.0)
        p /= math.factorial(self.k)
        return p.astype(complex)

    def compress(self, op) -> np.ndarray:
        """Operator on the embedded space -> coordinates in this basis."""
        op = as_matrix(op)
        return dagger(self.basis) @ op @ self.basis

    def embed(self, op) -> np.ndarray:
        op = as_matrix(op)
        return self.basis @ op @ dagger(self.basis)

    def compress_vector(self, v) -> np.ndarray:
        return dagger(self.basis) @ np.asarray(v, dtype=complex).reshape(-1)

    def support_defect(self, op) -> float:
        """|| op - P op P ||_F, zero iff op lives on the symmetric subspace."""
        op = as_matrix(op)
        return float(np.linalg.norm(op - self.embed(self.compress(op))))

    def rep(self, u: np.ndarray, conjugate: bool = False) -> np.ndarray:
        """Compressed representation B^dag U^{(x)k} B (or with U^*)."""
        u = np.conj(u) if conjugate else np.asarray(u, dtype=complex)
        t = self.basis.reshape((self.d,) * self.k + (self.dim,))
        for axis in range(self.k):
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
        return dagger(self.basis) @ t.reshape(self.embedded_dim, self.dim)


@functools.lru_cache(maxsize=64)
def symmetric_projector(d: int, k: int) -> SymmetricSpace:
    """SymmetricSpace for (d, k); memoised, the returned value is read-only."""
    if d < 1 or k < 0:
        raise ValueError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    basis = _symmetric_basis(d, k)
    basis.setflags(write=False)
    return SymmetricSpace(d, k, basis)


def product_state(psi, k: int) -> np.ndarray:
    """|psi><psi|^{(x)k} on the embedded space."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    v = np.ones(1, dtype=complex)
    for _ in range(k):
        v = np.kron(v, psi)
    return np.outer(v, v.conj())


def compressed_product_state(psi, k: int) -> np.ndarray:
    """|psi>^{(x)k} as a density matrix in symmetric-basis coordinates."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    space = symmetric_projector(psi.size, k)
    v = np.ones(1, dtype=complex)
    for _ in range(k):
        v = np.kron(v, psi)
    c = space.compress_vector(v)
    return np.outer(c, c.conj())


@dataclasses.dataclass(frozen=True)
class TraceDownReport:
    d: int
    n: int
    m: int
    factor: float
    max_deviation: float
    passed: bool


def trace_down_ratio(d: int, n: int, m: int, tol: float = 1e-10) -> TraceDownReport:
    """Check Tr_{first m}[P^(n)] = (d_+^(n) / d_+^(n-m)) P^(n-m)."""
    if not 1 <= m < n:
        raise DimensionError(f"need 1 <= m < n, got m={m}, n={n}")
    big = symmetric_projector(d, n).projector
    small = symmetric_projector(d, n - m).projector
    reduced = partial_trace(big, [d] * n, keep=range(m, n))
    factor = sym_dim(d, n) / sym_dim(d, n - m)
    dev = float(np.max(np.abs(reduced - factor * small)))
    return TraceDownReport(d, n, m, factor, dev, dev <= tol)


__all__ = [
    "Permutation", "SymmetricSpace", "TraceDownReport", "compressed_product_state",
    "occupations", "permutation_operator", "product_state", "sym_dim",
    "symmetric_projector", "trace_down_ratio",
]
