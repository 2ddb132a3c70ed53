"""Channel catalog: declarative specs, Choi operators and channel application.

Choi convention: ``C = (E (x) id)(|I>><<I|) = sum_ab E(|a><b|) (x) |a><b|`` on
``H_out (x) H_in``, output factor first, so ``E(rho) = Tr_in[C (I (x) rho^T)]``.

Copy channels (``SymmetricTrace``, ``UniversalCloning``) act on symmetric
subspaces and are stored in compressed coordinates: ``d_in = sym_dim(d, N)``
and ``d_out = sym_dim(d, M)`` in the occupation-number basis of
:mod:`retrosim.symmetric`. ``embedded_choi`` gives the full-space form.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence, Union

import numpy as np

from .config import TOL
from .errors import ContractViolation, DimensionError, DomainError
from .linalg import (as_matrix, dagger, double_ket, hermiticity_defect, kron,
                     max_eig, min_eig, partial_trace, permute_factors)
from .sampling import (haar_pure_state, haar_unitary, monomial_unitary, random_density_matrix,
                       random_hermitian, random_kraus, random_povm, rng_from)
from .symmetric import sym_dim, symmetric_projector


# ---------------------------------------------------------------------------
# states and measurements

def _check_state(m: np.ndarray, tol: float) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"density matrix must be square, got {m.shape}")
    scale = max(float(np.linalg.norm(m)), 1.0)
    if hermiticity_defect(m) > TOL.herm * scale:
        raise ContractViolation("density matrix is not Hermitian")
    if abs(np.trace(m).real - 1.0) > TOL.trace:
        raise ContractViolation(f"density matrix has trace {np.trace(m).real!r}")
    if min_eig(m) < -tol:
        raise ContractViolation("density matrix is not PSD")


@dataclasses.dataclass(frozen=True, eq=False)
class QuantumState:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        _check_state(m, TOL.psd)
        object.__setattr__(self, "matrix", (m + dagger(m)) / 2)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, psi) -> "QuantumState":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, d: int) -> "QuantumState":
        return cls(np.eye(d, dtype=complex) / d)


def _state_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, QuantumState) else as_matrix(rho)


@dataclasses.dataclass(frozen=True, eq=False)
class POVM:
    elements: tuple
    labels: tuple = ()

    def __post_init__(self):
        elems = tuple(as_matrix(e) for e in self.elements)
        if not elems:
            raise ContractViolation("POVM needs at least one element")
        dim = elems[0].shape[0]
        if any(e.shape != (dim, dim) for e in elems):
            raise DimensionError("POVM elements must share one square shape")
        for e in elems:
            if min_eig(e) < -TOL.psd:
                raise ContractViolation("POVM element is not PSD")
        total = sum(elems)
        if np.max(np.abs(total - np.eye(dim))) > TOL.povm:
            raise ContractViolation("POVM elements do not sum to the identity")
        labels = tuple(self.labels) or tuple(range(len(elems)))
        if len(labels) != len(elems):
            raise ContractViolation("one label per POVM element required")
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)


# ---------------------------------------------------------------------------
# channel specs

@dataclasses.dataclass(frozen=True, eq=False)
class Kraus:
    operators: tuple

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.operators)
        if not ops or any(k.shape != ops[0].shape for k in ops):
            raise DimensionError("Kraus operators must be non-empty with one common shape")
        s = sum(dagger(k) @ k for k in ops)
        if np.max(np.abs(s - np.eye(s.shape[0]))) > TOL.tp:
            raise ContractViolation("Kraus operators are not trace preserving")
        object.__setattr__(self, "operators", ops)

    @property
    def input_dim(self) -> int:
        return self.operators[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.operators[0].shape[0]


@dataclasses.dataclass(frozen=True, eq=False)
class MeasureAndPrepare:
    povm: POVM
    states: tuple

    def __post_init__(self):
        if not isinstance(self.povm, POVM):
            object.__setattr__(self, "povm", POVM(tuple(self.povm)))
        states = tuple(s if isinstance(s, QuantumState) else QuantumState(s) for s in self.states)
        if len(states) != len(self.povm):
            raise DimensionError("one output state per POVM outcome required")
        if len({s.dim for s in states}) != 1:
            raise DimensionError("output states must share one dimension")
        object.__setattr__(self, "states", states)

    @property
    def input_dim(self) -> int:
        return self.povm.dim

    @property
    def output_dim(self) -> int:
        return self.states[0].dim


def _positive(name: str, value: int, minimum: int = 1) -> None:
    if int(value) != value or value < minimum:
        raise ContractViolation(f"{name} must be an integer >= {minimum}, got {value!r}")


@dataclasses.dataclass(frozen=True)
class IdealClassical:
    d: int

    def __post_init__(self):
        _positive("d", self.d)

    input_dim = property(lambda self: self.d)
    output_dim = property(lambda self: self.d)


@dataclasses.dataclass(frozen=True)
class Identity:
    d: int

    def __post_init__(self):
        _positive("d", self.d)

    input_dim = property(lambda self: self.d)
    output_dim = property(lambda self: self.d)


@dataclasses.dataclass(frozen=True, eq=False)
class Erasure:
    """rho -> Tr[rho] rho0; ``d_in`` defaults to the dimension of rho0."""

    rho0: QuantumState
    d_in: int | None = None

    def __post_init__(self):
        if not isinstance(self.rho0, QuantumState):
            object.__setattr__(self, "rho0", QuantumState(self.rho0))
        if self.d_in is None:
            object.__setattr__(self, "d_in", self.rho0.dim)
        _positive("d_in", self.d_in)

    input_dim = property(lambda self: self.d_in)
    output_dim = property(lambda self: self.rho0.dim)


@dataclasses.dataclass(frozen=True)
class Estimation:
    """Measure with d U|0><0|U^dag dU, prepare U|0>."""

    d: int

    def __post_init__(self):
        _positive("d", self.d, 2)

    input_dim = property(lambda self: self.d)
    output_dim = property(lambda self: self.d)


@dataclasses.dataclass(frozen=True)
class UniversalNot:
    d: int

    def __post_init__(self):
        _positive("d", self.d, 2)

    input_dim = property(lambda self: self.d)
    output_dim = property(lambda self: self.d)


@dataclasses.dataclass(frozen=True)
class SymmetricTrace:
    """Symmetrised partial trace from N to M <= N copies.

    With ``symmetric_domain=False`` (only N=2, M=1) the channel acts on all of
    H (x) H as (Tr_2 + Tr_1)/2; otherwise on the symmetric subspaces.
    """

    d: int
    N: int
    M: int
    symmetric_domain: bool = True

    def __post_init__(self):
        _positive("d", self.d)
        _positive("N", self.N, 0)
        _positive("M", self.M, 0)
        if self.M > self.N:
            raise ContractViolation(f"trace channel needs M <= N, got N={self.N}, M={self.M}")
        if not self.symmetric_domain and (self.N, self.M) != (2, 1):
            raise ContractViolation("the unrestricted trace channel is only defined for N=2, M=1")

    @property
    def input_dim(self) -> int:
        return sym_dim(self.d, self.N) if self.symmetric_domain else self.d ** 2

    @property
    def output_dim(self) -> int:
        return sym_dim(self.d, self.M)


@dataclasses.dataclass(frozen=True)
class UniversalCloning:
    d: int
    N: int
    M: int

    def __post_init__(self):
        _positive("d", self.d)
        _positive("N", self.N, 0)
        _positive("M", self.M, 0)
        if self.M < self.N:
            raise ContractViolation(f"cloning needs M >= N, got N={self.N}, M={self.M}")

    @property
    def input_dim(self) -> int:
        return sym_dim(self.d, self.N)

    @property
    def output_dim(self) -> int:
        return sym_dim(self.d, self.M)


ChannelSpec = Union[Kraus, MeasureAndPrepare, IdealClassical, Identity, Erasure,
                    Estimation, UniversalNot, SymmetricTrace, UniversalCloning]

MEASURE_AND_PREPARE = (MeasureAndPrepare, IdealClassical, Estimation, UniversalNot)


def is_copy_channel(spec) -> bool:
    return isinstance(spec, UniversalCloning) or (
        isinstance(spec, SymmetricTrace) and spec.symmetric_domain)


# ---------------------------------------------------------------------------
# Choi operators

@dataclasses.dataclass(frozen=True)
class Symmetry:
    """Covariance (R_out(U) (x) R_in(U)) C (.)^dag = C of a catalog Choi operator.

    ``group`` is ``"unitary"`` (Haar U(d)) or ``"monomial"`` (phases times
    permutations). The output representation is irreducible in both cases.
    """

    group: str
    d: int
    out_power: int
    in_power: int
    out_conj: bool = False
    in_conj: bool = True


@dataclasses.dataclass(frozen=True, eq=False)
class ChoiOperator:
    matrix: np.ndarray
    d_out: int
    d_in: int
    domain_projector: np.ndarray | None = None
    symmetry: Symmetry | None = None
    label: str = ""

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape != (self.d_out * self.d_in,) * 2:
            raise DimensionError(f"Choi matrix {m.shape} does not match d_out={self.d_out}, d_in={self.d_in}")
        object.__setattr__(self, "matrix", m)
        if self.domain_projector is None:
            object.__setattr__(self, "domain_projector", np.eye(self.d_in, dtype=complex))

    @property
    def dims(self) -> list[int]:
        return [self.d_out, self.d_in]

    def marginal_in(self) -> np.ndarray:
        """Tr_out C."""
        return partial_trace(self.matrix, self.dims, keep=[1])

    def marginal_out(self) -> np.ndarray:
        return partial_trace(self.matrix, self.dims, keep=[0])

    def tp_defect(self) -> float:
        return float(np.max(np.abs(self.marginal_in() - self.domain_projector)))

    def validate(self, tol: float | None = None) -> "ChoiOperator":
        tol = TOL.tp if tol is None else tol
        lo = min_eig(self.matrix)
        if lo < -tol:
            raise ContractViolation(f"Choi operator is not PSD (min eigenvalue {lo:.3e})")
        defect = self.tp_defect()
        if defect > tol:
            raise ContractViolation(f"Tr_out C differs from the domain projector by {defect:.3e}")
        return self

    def apply(self, x) -> np.ndarray:
        """Tr_in[C (I (x) x^T)] for any operator x on the input space."""
        x = as_matrix(x)
        if x.shape != (self.d_in, self.d_in):
            raise DimensionError(f"input operator {x.shape} does not match d_in={self.d_in}")
        c = self.matrix.reshape(self.d_out, self.d_in, self.d_out, self.d_in)
        return np.einsum("aibj,ij->ab", c, x)

    def with_matrix(self, m: np.ndarray, label: str | None = None) -> "ChoiOperator":
        return ChoiOperator(m, self.d_out, self.d_in, self.domain_projector, self.symmetry,
                            self.label if label is None else label)


def max_entangled(d: int) -> np.ndarray:
    v = double_ket(np.eye(d))
    return v @ dagger(v)


def choi_from_map(fn, d_in: int, d_out: int) -> np.ndarray:
    """sum_ab fn(|a><b|) (x) |a><b| for a linear map fn on d_in x d_in operators."""
    c = np.zeros((d_out, d_in, d_out, d_in), dtype=complex)
    for a in range(d_in):
        for b in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[a, b] = 1.0
            c[:, a, :, b] = fn(e)
    n = d_out * d_in
    return c.reshape(n, n)


def _estimation_choi(d: int) -> np.ndarray:
    phi = max_entangled(d)
    eye = np.eye(d * d)
    return phi / d + (eye - phi / d) / (d + 1)


def _unot_choi(d: int) -> np.ndarray:
    phi = max_entangled(d)
    return d / (d * d - 1) * (np.eye(d * d) - phi / d)


def _trace_choi_compressed(d: int, n: int, m: int) -> np.ndarray:
    """(P_M (x) P_N) (|I^{(x)M}>><<I^{(x)M}| (x) P^(N-M)) (P_M (x) P_N) in symmetric coordinates.

    Built from the eigenvectors Phi_r = (B_M^dag (x) B_N^T)(|I_{d^M}>> (x) phi_r),
    phi_r running over the symmetric basis of the last N - M factors.
    """
    out_space = symmetric_projector(d, m)
    in_space = symmetric_projector(d, n)
    rest = symmetric_projector(d, n - m)
    bn = in_space.basis.reshape(d ** m, d ** (n - m), in_space.dim)
    # (B_M^dag Mat_r B_N)[alpha, a] with Mat_r[x, (y, s)] = delta_xy phi_r[s]
    r = np.einsum("xA,sr,xsa->rAa", np.conj(out_space.basis), rest.basis, bn)
    vecs = r.reshape(rest.dim, out_space.dim * in_space.dim).T
    return vecs @ dagger(vecs)


def _unrestricted_two_to_one(d: int) -> np.ndarray:
    first = kron(max_entangled(d), np.eye(d))
    second = permute_factors(first, [d, d, d], [0, 2, 1])
    return (first + second) / 2


def _catalog_symmetry(spec) -> Symmetry | None:
    match spec:
        case Identity(d) | Estimation(d) | UniversalNot(d):
            return Symmetry("unitary", d, 1, 1)
        case IdealClassical(d):
            return Symmetry("monomial", d, 1, 1)
        case SymmetricTrace(d, n, m, True) | UniversalCloning(d, n, m):
            return Symmetry("unitary", d, m, n)
        case SymmetricTrace(d, 2, 1, False):
            return Symmetry("unitary", d, 1, 2)
    return None


def choi_of(spec) -> ChoiOperator:
    """Choi operator of a catalog channel (compressed for copy channels)."""
    match spec:
        case Kraus(ops):
            vecs = np.hstack([double_ket(k) for k in ops])
            m = vecs @ dagger(vecs)
        case MeasureAndPrepare(povm, states):
            m = sum(np.kron(s.matrix, p.T) for p, s in zip(povm.elements, states))
        case IdealClassical(d):
            m = np.zeros((d * d, d * d), dtype=complex)
            idx = np.arange(d) * (d + 1)
            m[idx, idx] = 1.0
        case Identity(d):
            m = max_entangled(d)
        case Erasure(rho0, d_in):
            m = np.kron(rho0.matrix, np.eye(d_in))
        case Estimation(d):
            m = _estimation_choi(d)
        case UniversalNot(d):
            m = _unot_choi(d)
        case SymmetricTrace(d, n, mm, True):
            m = _trace_choi_compressed(d, n, mm)
        case SymmetricTrace(d, 2, 1, False):
            m = _unrestricted_two_to_one(d)
        case UniversalCloning():
            m = choi_from_map(lambda x: apply_map(spec, x), spec.input_dim, spec.output_dim)
        case _:
            raise ContractViolation(f"not a channel spec: {spec!r}")
    m = (m + dagger(m)) / 2
    return ChoiOperator(m, spec.output_dim, spec.input_dim, symmetry=_catalog_symmetry(spec),
                        label=type(spec).__name__)


def embedded_choi(spec) -> ChoiOperator:
    """Copy-channel Choi operator on the full spaces, with domain projector P_+^(N)."""
    if not is_copy_channel(spec):
        return choi_of(spec)
    c = choi_of(spec)
    bm = symmetric_projector(spec.d, spec.M).basis
    bn = symmetric_projector(spec.d, spec.N).basis
    left = np.kron(bm, np.conj(bn))
    full = left @ c.matrix @ dagger(left)
    return ChoiOperator(full, spec.d ** spec.M, spec.d ** spec.N,
                        domain_projector=np.conj(bn) @ bn.T, label=c.label + "/embedded")


# ---------------------------------------------------------------------------
# application

def _trace_apply(spec: SymmetricTrace, x: np.ndarray) -> np.ndarray:
    d, n, m = spec.d, spec.N, spec.M
    if not spec.symmetric_domain:
        return (partial_trace(x, [d, d], [0]) + partial_trace(x, [d, d], [1])) / 2
    in_space = symmetric_projector(d, n)
    out_space = symmetric_projector(d, m)
    full = in_space.embed(x)
    reduced = partial_trace(full, [d ** m, d ** (n - m)], keep=[0])
    return out_space.compress(reduced)


def _clone_apply(spec: UniversalCloning, x: np.ndarray) -> np.ndarray:
    d, n, m = spec.d, spec.N, spec.M
    in_space = symmetric_projector(d, n)
    out_space = symmetric_projector(d, m)
    scale = in_space.dim / out_space.dim
    # B_M^dag ((B_N x B_N^dag) (x) I) B_M, without forming the d^M x d^M operator
    bm = out_space.basis.reshape(d ** n, d ** (m - n), out_space.dim)
    w = np.einsum("xa,xrA->raA", np.conj(in_space.basis), bm)
    return scale * np.einsum("raA,ab,rbB->AB", np.conj(w), x, w)


def apply_map(spec, x) -> np.ndarray:
    """The channel's linear map on an arbitrary operator of the (compressed) input space."""
    x = as_matrix(x)
    if x.shape != (spec.input_dim, spec.input_dim):
        raise DimensionError(f"input {x.shape} does not match input_dim={spec.input_dim}")
    tr = np.trace(x)
    match spec:
        case Kraus(ops):
            return sum(k @ x @ dagger(k) for k in ops)
        case MeasureAndPrepare(povm, states):
            return sum(s.matrix * np.trace(p @ x) for p, s in zip(povm.elements, states))
        case IdealClassical(d):
            return np.diag(np.diag(x))
        case Identity(d):
            return x.copy()
        case Erasure(rho0, _):
            return rho0.matrix * tr
        case Estimation(d):
            return (tr * np.eye(d) + x) / (d + 1)
        case UniversalNot(d):
            return (d * tr * np.eye(d) - x) / (d * d - 1)
        case SymmetricTrace():
            return _trace_apply(spec, x)
        case UniversalCloning():
            return _clone_apply(spec, x)
    raise ContractViolation(f"not a channel spec: {spec!r}")


def apply(spec, rho) -> QuantumState:
    """Apply a channel to a state.

    Copy channels accept either compressed input (dimension ``sym_dim(d, N)``)
    or an embedded ``d^N`` state supported on the symmetric subspace; the
    output uses the same representation as the input.
    """
    x = _state_matrix(rho)
    if is_copy_channel(spec) and x.shape[0] != spec.input_dim and x.shape[0] == spec.d ** spec.N:
        in_space = symmetric_projector(spec.d, spec.N)
        defect = in_space.support_defect(x)
        if defect > TOL.tp:
            raise DomainError(f"input has weight {defect:.3e} outside the symmetric subspace")
        out = apply_map(spec, in_space.compress(x))
        return QuantumState(symmetric_projector(spec.d, spec.M).embed(out))
    return QuantumState(apply_map(spec, x))


# ---------------------------------------------------------------------------
# covariance and duality checks

def _rep_matrix(u: np.ndarray, d: int, power: int, conj: bool, dim: int) -> np.ndarray:
    if power == 0:
        return np.ones((1, 1), dtype=complex)
    if dim == d ** power:
        base = np.conj(u) if conj else u
        out = base
        for _ in range(power - 1):
            out = np.kron(out, base)
        return out
    space = symmetric_projector(d, power)
    if space.dim != dim:
        raise DimensionError(f"no power-{power} representation of U({d}) on dimension {dim}")
    return space.rep(u, conjugate=conj)


@dataclasses.dataclass(frozen=True)
class CovarianceReport:
    residual: float
    samples: int
    tol: float
    passed: bool


def covariance_check(choi: ChoiOperator, out_rep: tuple[int, bool] | None = None,
                     in_rep: tuple[int, bool] | None = None, samples: int = 50,
                     tol: float | None = None, *, d: int | None = None,
                     group: str | None = None, seed=0) -> CovarianceReport:
    """max_U ||(R_out(U) (x) R_in(U)) C (R_out(U) (x) R_in(U))^dag - C||_F over sampled U."""
    sym = choi.symmetry
    if out_rep is None or in_rep is None:
        if sym is None:
            raise ContractViolation("representations required for a Choi operator without symmetry")
        out_rep = out_rep or (sym.out_power, sym.out_conj)
        in_rep = in_rep or (sym.in_power, sym.in_conj)
    if d is None:
        if sym is not None:
            d = sym.d
        elif out_rep[0] == 1:
            d = choi.d_out
        elif in_rep[0] == 1:
            d = choi.d_in
        else:
            raise ContractViolation("local dimension d is required")
    group = group or (sym.group if sym is not None else "unitary")
    sampler = {"unitary": haar_unitary, "monomial": monomial_unitary}[group]
    tol = TOL.covariance if tol is None else tol
    rng = rng_from(seed)
    worst = 0.0
    for _ in range(samples):
        u = sampler(d, rng)
        r = np.kron(_rep_matrix(u, d, out_rep[0], out_rep[1], choi.d_out),
                    _rep_matrix(u, d, in_rep[0], in_rep[1], choi.d_in))
        worst = max(worst, float(np.linalg.norm(r @ choi.matrix @ dagger(r) - choi.matrix)))
    return CovarianceReport(worst, samples, tol, worst <= tol)


@dataclasses.dataclass(frozen=True)
class DualityReport:
    d: int
    N: int
    M: int
    scale: float
    deviation: float
    passed: bool


def duality_check(d: int, n: int, m: int, tol: float = 1e-9, *,
                  perturb: float = 0.0, seed=0) -> DualityReport:
    """C_clone(N->M) == (d_+^N / d_+^M) S C_trace(M->N) S, S swapping the two factors.

    ``perturb`` adds a random Hermitian perturbation of that Frobenius norm to
    the cloning side (fault injection for the verification harness).
    """
    if m < n:
        raise ContractViolation(f"duality check needs M >= N, got N={n}, M={m}")
    clone = choi_of(UniversalCloning(d, n, m)).matrix
    trace = choi_of(SymmetricTrace(d, m, n)).matrix
    dn, dm = sym_dim(d, n), sym_dim(d, m)
    swapped = permute_factors(trace, [dn, dm], [1, 0])
    if perturb:
        clone = clone + perturb * random_hermitian(clone.shape[0], seed)
    scale = dn / dm
    dev = float(np.linalg.norm(clone - scale * swapped))
    return DualityReport(d, n, m, scale, dev, dev <= tol)


# ---------------------------------------------------------------------------
# random channels for property tests

def random_mp_channel(d_in: int, d_out: int, outcomes: int | None = None, rng=None) -> MeasureAndPrepare:
    rng = rng_from(rng)
    outcomes = outcomes or int(rng.integers(2, 2 * d_in + 2))
    povm = POVM(tuple(random_povm(d_in, outcomes, rng)))
    states = tuple(QuantumState(random_density_matrix(d_out, rng)) for _ in range(outcomes))
    return MeasureAndPrepare(povm, states)


def random_kraus_channel(d_in: int, d_out: int, n_ops: int = 3, rng=None) -> Kraus:
    return Kraus(tuple(random_kraus(d_in, d_out, n_ops, rng)))


def random_erasure_channel(d_out: int, d_in: int | None = None, rng=None, rank: int | None = None) -> Erasure:
    return Erasure(QuantumState(random_density_matrix(d_out, rng, rank)), d_in)


def dims_of(spec) -> tuple[int, int]:
    return spec.input_dim, spec.output_dim


def probe_states(d: int, count: int, rng=None) -> Sequence[np.ndarray]:
    rng = rng_from(rng)
    return [np.outer(v, v.conj()) for v in (haar_pure_state(d, rng) for _ in range(count))]


def max_choi_eigenvalue(spec) -> float:
    return max_eig(choi_of(spec).matrix)
