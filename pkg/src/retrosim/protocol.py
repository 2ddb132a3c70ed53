"""Explicit teleportation-style protocols that simulate a channel to the past.

A protocol prepares ``|Psi>`` on ``A (x) out`` now and later measures the
channel input together with ``A``. Outcome ``i`` induces the map
``E_i(rho) = Tr_{in,A}[(F_i (x) I_out)(rho (x) |Psi><Psi|)]``, and
:func:`realize` chooses ``Psi`` and ``F_i`` so that the success outcome
induces ``p C`` and the failure outcome ``rho0 (x) I - p C``.

Construction, with ``rho0 = V L V^dag`` restricted to its support:

* ``Psi = sqrt(L) V^T`` as an ``r x d_out`` matrix, so ``Tr_A |Psi><Psi| = rho0``;
* ``T_i = (L^{-1/2} V^dag (x) I) E_i (V L^{-1/2} (x) I)`` on ``A (x) in``;
* ``F_i[(b, alpha), (a, beta)] = T_i[(beta, a), (alpha, b)]``, i.e. ``T_i``
  with its factors swapped to ``in (x) A`` and then transposed.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channels import POVM, ChoiOperator, QuantumState, choi_from_map
from .config import TOL
from .errors import DimensionError, PreconditionError
from .linalg import as_matrix, dagger, fidelity, hermitian_eig, kron, min_eig, partial_trace

SUCCESS = 0
FAILURE = 1
DEFAULT_BATCH = 2 ** 14


@dataclasses.dataclass(frozen=True, eq=False)
class TeleportationProtocol:
    psi: np.ndarray          # unit vector on A (x) out
    povm: POVM               # on in (x) A
    success_outcome: int
    p_declared: float
    choi: ChoiOperator       # the simulated channel
    rho0: QuantumState

    @property
    def d_a(self) -> int:
        return self.psi.size // self.choi.d_out

    @property
    def d_in(self) -> int:
        return self.choi.d_in

    @property
    def d_out(self) -> int:
        return self.choi.d_out

    @property
    def psi_matrix(self) -> np.ndarray:
        """Psi as an A x out matrix."""
        return self.psi.reshape(self.d_a, self.d_out)

    def element(self, outcome) -> np.ndarray:
        return self.povm.elements[self.povm.labels.index(outcome)]

    def ancilla_state(self) -> np.ndarray:
        """Tr_out |Psi><Psi|."""
        m = self.psi_matrix
        return m @ dagger(m)

    def outcome_probabilities(self, rho) -> np.ndarray:
        """Born probabilities Tr[(F_i (x) I)(rho (x) |Psi><Psi|)], one per POVM element."""
        sigma = np.kron(_matrix(rho, self.d_in), self.ancilla_state())
        return np.array([float(np.real(np.sum(f * sigma.T))) for f in self.povm.elements])

    def unnormalized_output(self, outcome, rho) -> np.ndarray:
        """E_i(rho), the output conditioned on ``outcome`` times its probability."""
        f = self.element(outcome).reshape(self.d_in, self.d_a, self.d_in, self.d_a)
        m = self.psi_matrix
        return np.einsum("aAbB,ba,Bo,Ap->op", f, _matrix(rho, self.d_in), m, m.conj())

    def output_marginal(self, rho) -> np.ndarray:
        """Output state averaged over all outcomes; equals rho0 for every input."""
        return sum(self.unnormalized_output(k, rho) for k in self.povm.labels)


def _matrix(rho, dim: int) -> np.ndarray:
    m = rho.matrix if isinstance(rho, QuantumState) else as_matrix(rho)
    if m.shape != (dim, dim):
        raise DimensionError(f"input of shape {m.shape} does not match dimension {dim}")
    return m


def _swap_transpose(t: np.ndarray, d_a: int, d_in: int) -> np.ndarray:
    return t.reshape(d_a, d_in, d_a, d_in).transpose(3, 2, 1, 0).reshape(d_in * d_a, d_in * d_a)


def realize(choi: ChoiOperator, p: float, rho0, tol: float | None = None) -> TeleportationProtocol:
    """Protocol whose success outcome induces ``p C`` and whose outcomes sum to ``rho0 (x) I``."""
    tol = TOL.feasibility if tol is None else tol
    rho0 = rho0 if isinstance(rho0, QuantumState) else QuantumState(rho0)
    if rho0.dim != choi.d_out:
        raise DimensionError(f"rho0 has dimension {rho0.dim}, channel output is {choi.d_out}")
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"p = {p!r} is not a probability")
    e0 = p * choi.matrix
    e1 = np.kron(rho0.matrix, choi.domain_projector) - e0
    residual = min_eig(e1)
    if residual < -tol:
        raise PreconditionError(
            f"(p, rho0) violates p C <= rho0 (x) I: residual eigenvalue {residual:.3e}")

    w, v = hermitian_eig(rho0.matrix)
    keep = w > TOL.rank
    lam, v = w[keep], v[:, keep]
    r = lam.size
    psi = (np.sqrt(lam)[:, None] * v.T).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    w_pinv = kron(dagger(v) / np.sqrt(lam)[:, None], np.eye(choi.d_in))
    t0 = w_pinv @ e0 @ dagger(w_pinv)
    f0 = _swap_transpose((t0 + dagger(t0)) / 2, r, choi.d_in)
    eye = np.eye(choi.d_in * r)
    f1 = eye - f0
    if np.max(np.abs(f1)) <= tol:
        povm = POVM((eye,), (SUCCESS,))
    else:
        # pull slightly negative round-off eigenvalues of the failure element back to zero
        fw, fv = hermitian_eig(f1)
        if fw[-1] < 0:
            f1 = (fv * np.clip(fw, 0.0, None)) @ dagger(fv)
            f0 = eye - f1
        povm = POVM((f0, f1), (SUCCESS, FAILURE))
    return TeleportationProtocol(psi, povm, SUCCESS, float(p), choi, rho0)


def induced_choi(protocol: TeleportationProtocol, outcome) -> ChoiOperator:
    """Choi operator of E_i, by contracting rho (x) |Psi><Psi| with F_i (x) I_out explicitly."""
    f = protocol.element(outcome)
    resource = np.outer(protocol.psi, protocol.psi.conj())
    big = kron(f, np.eye(protocol.d_out))
    dims = [protocol.d_in, protocol.d_a, protocol.d_out]

    def channel(x):
        return partial_trace(big @ kron(x, resource), dims, keep=[2])

    m = choi_from_map(channel, protocol.d_in, protocol.d_out)
    c = protocol.choi
    return ChoiOperator(m, c.d_out, c.d_in, c.domain_projector, label=f"outcome {outcome}")


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclasses.dataclass(frozen=True)
class BatchStats:
    index: int
    trials: int
    successes: int


@dataclasses.dataclass(frozen=True)
class SimulationStats:
    trials: int
    successes: int
    conditional_output_fidelity_min: float
    seed: int
    success_probability: float
    batches: tuple = ()

    @property
    def frequency(self) -> float:
        return self.successes / self.trials

    @property
    def sigma(self) -> float:
        p = self.success_probability
        return math.sqrt(p * (1 - p) / self.trials)

    def within(self, k: float = 3.0) -> bool:
        return abs(self.frequency - self.success_probability) <= k * self.sigma


def batch_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for batch ``index``: reproducible from (seed, index) alone."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _target_state(protocol: TeleportationProtocol, rho) -> np.ndarray | None:
    out = protocol.choi.apply(rho)
    tr = np.trace(out).real
    return None if tr <= 0 else out / tr


def simulate(protocol: TeleportationProtocol, rho, trials: int, seed: int = 0,
             batch_size: int = DEFAULT_BATCH, workers: int = 1) -> SimulationStats:
    """Sample measurement outcomes and score the conditional outputs.

    Conditional states are computed exactly for every success trial and
    compared with ``C(rho) / Tr C(rho)`` by fidelity. With no successes the
    minimum over the empty set is reported as 1. Results depend only on
    ``(seed, trials, batch_size)``, not on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rho = _matrix(rho, protocol.d_in)
    probs = np.clip(protocol.outcome_probabilities(rho), 0.0, None)
    probs = probs / probs.sum()
    success_idx = protocol.povm.labels.index(protocol.success_outcome)

    sizes = [min(batch_size, trials - start) for start in range(0, trials, batch_size)]

    def run(index: int) -> BatchStats:
        outcomes = batch_rng(seed, index).choice(len(probs), size=sizes[index], p=probs)
        return BatchStats(index, sizes[index], int(np.count_nonzero(outcomes == success_idx)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = tuple(pool.map(run, range(len(sizes))))
    else:
        batches = tuple(run(i) for i in range(len(sizes)))
    successes = sum(b.successes for b in batches)

    fid = 1.0
    target = _target_state(protocol, rho)
    if successes and target is not None:
        out = protocol.unnormalized_output(protocol.success_outcome, rho)
        # every success trial on this input ends in the same conditional state
        fid = min(1.0, fidelity(out / np.trace(out).real, target))
    return SimulationStats(trials, successes, fid, seed, float(probs[success_idx]), batches)
