"""Dense complex linear algebra on numpy arrays.

Tensor factors are flattened with the leftmost factor as the most
significant index: the composite index of ``(i_0, i_1, ..., i_n)`` over
dimensions ``(d_0, ..., d_n)`` is ``((i_0 d_1 + i_1) d_2 + ...)``. This is
numpy's C order and every module relies on it.
"""

from __future__ import annotations

from math import prod
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .config import CAPACITY, TOL
from .errors import CapacityError, ContractViolation, DimensionError, NumericError


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def kron(a, b, *, max_dim: int | None = None) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    limit = CAPACITY.max_dim if max_dim is None else max_dim
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > limit:
        raise CapacityError(f"kron result {rows}x{cols} exceeds max dimension {limit}")
    return np.kron(a, b)


def kron_all(factors: Iterable, *, max_dim: int | None = None) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = kron(out, f, max_dim=max_dim)
    return out


def _check_square(op: np.ndarray, dims: Sequence[int]) -> None:
    n = prod(dims)
    if op.shape != (n, n):
        raise DimensionError(f"operator shape {op.shape} does not match dims {list(dims)}")


def partial_trace(op, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    The kept factors appear in ascending index order in the result.
    """
    op = as_matrix(op)
    dims = [int(x) for x in dims]
    _check_square(op, dims)
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep={keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = op.reshape(dims + dims)
    # trace from the highest factor down so earlier axis numbers stay valid
    live = n
    for i in reversed(range(n)):
        if i in keep:
            continue
        t = np.trace(t, axis1=i, axis2=i + live)
        live -= 1
    kd = prod(dims[k] for k in keep)
    return t.reshape(kd, kd)


def permute_factors(op, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: factor ``order[j]`` of the input becomes factor ``j``."""
    op = as_matrix(op)
    dims = list(dims)
    _check_square(op, dims)
    n = len(dims)
    if sorted(order) != list(range(n)):
        raise DimensionError(f"order {order} is not a permutation of {n} factors")
    t = op.reshape(dims + dims)
    t = t.transpose(list(order) + [n + k for k in order])
    d = prod(dims)
    return t.reshape(d, d)


def partial_transpose(op, dims: Sequence[int], factors: Iterable[int]) -> np.ndarray:
    op = as_matrix(op)
    dims = list(dims)
    _check_square(op, dims)
    n = len(dims)
    axes = list(range(2 * n))
    for k in factors:
        axes[k], axes[n + k] = axes[n + k], axes[k]
    return op.reshape(dims + dims).transpose(axes).reshape(op.shape)


def hermiticity_defect(op: np.ndarray) -> float:
    return float(np.linalg.norm(op - dagger(op)))


def hermitize(op, tol: float | None = None) -> np.ndarray:
    """Return (H + H^dag)/2, refusing inputs that are not Hermitian within tolerance."""
    op = as_matrix(op)
    if op.shape[0] != op.shape[1]:
        raise DimensionError(f"expected a square matrix, got {op.shape}")
    rtol = TOL.herm if tol is None else tol
    scale = max(float(np.linalg.norm(op)), 1.0)
    defect = hermiticity_defect(op)
    if defect > rtol * scale:
        raise ContractViolation(f"operator is not Hermitian (defect {defect:.3e})")
    return (op + dagger(op)) / 2


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray   # descending
    eigenvectors: np.ndarray  # columns, matching order


def hermitian_eig(op, tol: float | None = None) -> HermitianEig:
    h = hermitize(op, tol)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigendecomposition did not converge: {exc}",
                           diagnostics={"shape": h.shape}) from exc
    return HermitianEig(w[::-1].copy(), v[:, ::-1].copy())


def eigvalsh_desc(op, tol: float | None = None) -> np.ndarray:
    h = hermitize(op, tol)
    return np.linalg.eigvalsh(h)[::-1]


def max_eig(op) -> float:
    return float(eigvalsh_desc(op)[0])


def min_eig(op) -> float:
    return float(eigvalsh_desc(op)[-1])


def double_ket(c) -> np.ndarray:
    """Column vector |C>> = sum_ij C_ij |i>|j>."""
    c = as_matrix(c)
    return c.reshape(-1, 1).copy()


def from_double_ket(v, rows: int, cols: int) -> np.ndarray:
    v = as_matrix(v)
    if v.size != rows * cols:
        raise DimensionError(f"vector of length {v.size} cannot be {rows}x{cols}")
    return v.reshape(rows, cols).copy()


def psd_check(op, tol: float | None = None) -> tuple[bool, float]:
    """Return ``(min_eig >= -tol, min_eig)``."""
    tol = TOL.psd if tol is None else tol
    lo = min_eig(op)
    return lo >= -tol, lo


def _psd_eig(op, tol: float | None):
    tol = TOL.psd if tol is None else tol
    w, v = hermitian_eig(op)
    if w.size and w[-1] < -tol:
        raise ContractViolation(f"operator is not PSD (min eigenvalue {w[-1]:.3e})")
    return np.clip(w, 0.0, None), v


def sqrt_psd(op, tol: float | None = None) -> np.ndarray:
    w, v = _psd_eig(op, tol)
    return (v * np.sqrt(w)) @ dagger(v)


def pinv_sqrt_psd(op, rank_tol: float | None = None, tol: float | None = None) -> np.ndarray:
    """Inverse square root on the support; eigenvalues <= rank_tol map to zero."""
    rank_tol = TOL.rank if rank_tol is None else rank_tol
    w, v = _psd_eig(op, tol)
    inv = np.zeros_like(w)
    big = w > rank_tol
    inv[big] = 1.0 / np.sqrt(w[big])
    return (v * inv) @ dagger(v)


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    s = sqrt_psd(rho)
    inner = hermitize(s @ as_matrix(sigma) @ s, tol=1e-6)
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(np.sum(np.sqrt(w)) ** 2)
