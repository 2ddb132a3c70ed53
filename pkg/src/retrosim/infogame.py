"""Communication games and the information bounds they place on p.

For a game with encodings ``rho_i``, prior ``pi``, payoff ``f(i, j)`` and
decoding POVM ``P_j``, any simulation probability obeys
``p <= f_pi / E_ave`` with ``E_ave = sum_i pi_i sum_j f(i, j) Tr[C(rho_i) P_j]``
and ``f_pi = max_j sum_i pi_i f(i, j)``.

Copy channels are scored with the continuous game: Haar-random inputs
``phi^(x)N``, decoding density ``sym_dim(d, M) phi^(x)M`` and a delta payoff.
Its ``f_pi`` is 1 and its expected payoff does not depend on ``phi``, so it is
read off at ``phi = |0>``.
"""

from __future__ import annotations

import dataclasses
from fractions import Fraction

import numpy as np

from .causality import CausalityCertificate, copy_probability, max_probability
from .channels import (POVM, ChoiOperator, IdealClassical, QuantumState, SymmetricTrace,
                       UniversalCloning, choi_of, is_copy_channel)
from .errors import CapacityError, ContractViolation, DimensionError
from .linalg import partial_trace
from .sampling import haar_pure_state, rng_from
from .symmetric import _check_embedded, compressed_product_state, sym_dim, symmetric_projector

BOUND_SLACK = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class PayoffGame:
    """Discrete game; with ``ref_dim > 1`` encodings live on in (x) R and decoding on out (x) R."""

    encodings: tuple
    prior: np.ndarray
    payoff: np.ndarray
    decoding: POVM
    ref_dim: int = 1

    def __post_init__(self):
        enc = tuple(e if isinstance(e, QuantumState) else QuantumState(e) for e in self.encodings)
        prior = np.asarray(self.prior, dtype=float)
        payoff = np.asarray(self.payoff, dtype=float)
        if prior.shape != (len(enc),):
            raise DimensionError("one prior weight per encoding required")
        if abs(prior.sum() - 1.0) > 1e-12 or np.any(prior < 0):
            raise ContractViolation("prior must be a probability vector")
        if payoff.shape != (len(enc), len(self.decoding)):
            raise DimensionError(f"payoff must be {len(enc)} x {len(self.decoding)}, got {payoff.shape}")
        if not np.all(np.isfinite(payoff)):
            raise ContractViolation("payoff has non-finite entries")
        object.__setattr__(self, "encodings", enc)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "payoff", payoff)


@dataclasses.dataclass(frozen=True)
class ContinuousCopyGame:
    """Haar-random ``phi^(x)N`` inputs decoded by ``sym_dim(d, M) phi^(x)M``, delta payoff."""

    d: int
    N: int
    M: int


@dataclasses.dataclass(frozen=True)
class GameReport:
    e_ave: float
    f_pi: float
    bound: float
    p_max: float
    satisfied: bool


def lottery_game(d: int) -> PayoffGame:
    """Guess one of d equally likely basis labels; a correct guess pays d."""
    basis = [np.diag(np.eye(d)[i]).astype(complex) for i in range(d)]
    return PayoffGame(tuple(basis), np.full(d, 1.0 / d), d * np.eye(d), POVM(tuple(basis)))


def copy_game(spec) -> ContinuousCopyGame:
    if not is_copy_channel(spec):
        raise TypeError(f"{type(spec).__name__} is not a copy channel")
    return ContinuousCopyGame(spec.d, spec.N, spec.M)


def _choi(channel) -> ChoiOperator:
    return channel if isinstance(channel, ChoiOperator) else choi_of(channel)


def _apply_with_reference(choi: ChoiOperator, rho: np.ndarray, ref_dim: int) -> np.ndarray:
    """(C (x) id_R)(rho) for rho on in (x) R."""
    if rho.shape != (choi.d_in * ref_dim,) * 2:
        raise DimensionError(f"encoding of shape {rho.shape} does not match in (x) R")
    c = choi.matrix.reshape(choi.d_out, choi.d_in, choi.d_out, choi.d_in)
    r = rho.reshape(choi.d_in, ref_dim, choi.d_in, ref_dim)
    n = choi.d_out * ref_dim
    return np.einsum("aibj,irjs->arbs", c, r).reshape(n, n)


def _score(outputs, game: PayoffGame) -> float:
    probs = np.array([[np.real(np.sum(p * out.T)) for p in game.decoding.elements] for out in outputs])
    return float(game.prior @ np.sum(game.payoff * probs, axis=1))


def continuous_payoff(channel, game: ContinuousCopyGame, phi) -> float:
    """E_phi = sym_dim(d, M) <phi^M| C(phi^N) |phi^M> for one pure state phi."""
    choi = _choi(channel)
    rho = compressed_product_state(phi, game.N)
    target = compressed_product_state(phi, game.M)
    out = choi.apply(rho)
    return float(sym_dim(game.d, game.M) * np.real(np.sum(out * target.T)))


def expected_payoff(channel, game) -> float:
    """Average expected payoff of ``game`` played through ``channel`` (spec or Choi operator)."""
    choi = _choi(channel)
    if isinstance(game, ContinuousCopyGame):
        if choi.d_in != sym_dim(game.d, game.N) or choi.d_out != sym_dim(game.d, game.M):
            raise DimensionError("copy game does not match the channel's symmetric spaces")
        # |0>^(x)k is column 0 of the symmetric basis
        return float(sym_dim(game.d, game.M) * choi.matrix[0, 0].real)
    if game.ref_dim == 1:
        outputs = [choi.apply(e.matrix) for e in game.encodings]
    else:
        outputs = [_apply_with_reference(choi, e.matrix, game.ref_dim) for e in game.encodings]
    if outputs[0].shape[0] != game.decoding.dim:
        raise DimensionError("decoding POVM does not act on the channel output")
    return _score(outputs, game)


def payoff_spread(channel, game: ContinuousCopyGame, samples: int = 50, seed=0) -> float:
    """max - min of E_phi over Haar-random phi; zero when the payoff is state independent."""
    rng = rng_from(seed)
    values = [continuous_payoff(channel, game, haar_pure_state(game.d, rng)) for _ in range(samples)]
    return max(values) - min(values)


def f_pi(game) -> float:
    if isinstance(game, ContinuousCopyGame):
        return 1.0
    return float(np.max(game.prior @ game.payoff))


def _report(e_ave: float, numerator: float, p_max: float) -> GameReport:
    bound = numerator / e_ave if e_ave > 0 else float("inf")
    return GameReport(e_ave, numerator, bound, p_max, p_max <= bound + BOUND_SLACK)


def _certificate(channel, cert) -> CausalityCertificate:
    return cert if cert is not None else max_probability(_choi(channel))


def information_bound_check(channel, game, cert: CausalityCertificate | None = None) -> GameReport:
    cert = _certificate(channel, cert)
    return _report(expected_payoff(channel, game), f_pi(game), cert.p_max)


def assisted_bound(channel, game: PayoffGame, cert: CausalityCertificate | None = None) -> GameReport:
    """Entanglement-assisted bound p <= E^(R) / E^(SR), reference passed through ideally.

    ``E^(R)`` replaces the channel output with ``rho0 (x) Tr_in[rho_i]``, using the
    certificate's ``rho0``. The returned report stores ``E^(R)`` in ``f_pi``.
    """
    choi = _choi(channel)
    cert = _certificate(choi, cert)
    e_sr = expected_payoff(choi, game)
    ref = [partial_trace(e.matrix, [choi.d_in, game.ref_dim], keep=[1]) for e in game.encodings]
    e_r = _score([np.kron(cert.rho0.matrix, r) for r in ref], game)
    return _report(e_sr, e_r, cert.p_max)


def copy_bound(spec) -> Fraction:
    """1 / sym_dim(d, min(N, M)): the information bound for trace and cloning channels."""
    return Fraction(1, sym_dim(spec.d, min(spec.N, spec.M)))


# ---------------------------------------------------------------------------
# large-N behaviour

def estimation_choi(d: int, n: int, m: int) -> ChoiOperator:
    """Compressed Choi operator of rho -> int dpsi psi^(x)m Tr[rho sym_dim(d,n) psi^(x)n].

    Equals ``sym_dim(d,n)/sym_dim(d,n+m)`` times the partial transpose of the
    (n+m)-copy symmetric projector on its last n factors.
    """
    _check_embedded(d, n + m)
    big = symmetric_projector(d, n + m).basis
    b_out = symmetric_projector(d, m).basis
    b_in = symmetric_projector(d, n).basis
    cols = big.shape[1]
    r = big.T.reshape(cols, d ** m, d ** n)
    # the basis is real, so compressing the input factor needs no conjugation
    r = np.einsum("xm,kxy,yn->kmn", b_out.conj(), r, b_in)
    c = np.einsum("kmv,kMn->mnMv", r, r.conj())
    dm, dn = b_out.shape[1], b_in.shape[1]
    scale = sym_dim(d, n) / sym_dim(d, n + m)
    return ChoiOperator(scale * c.reshape(dm * dn, dm * dn), dm, dn, label=f"estimation {n}->{m}")


@dataclasses.dataclass(frozen=True)
class ConvergenceRow:
    N: int
    p: float
    gap: float
    choi_distance: float | None


@dataclasses.dataclass(frozen=True)
class ConvergenceReport:
    d: int
    M: int
    limit: float
    rows: tuple
    gap_monotone: bool


def trace_norm(a: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def asymptotic_convergence_report(d: int, m: int, n_max: int, distances: bool = True) -> ConvergenceReport:
    """Rows N = M..n_max of p(N->M), the gap to 1/sym_dim(d, M) and ||C_trace - C_est||_1 / sym_dim(d, N).

    The distance column is ``None`` where the estimation channel exceeds capacity.
    """
    limit = Fraction(1, sym_dim(d, m))
    rows = []
    for n in range(m, n_max + 1):
        p = copy_probability(d, n, m)
        dist = None
        if distances:
            try:
                diff = choi_of(SymmetricTrace(d, n, m)).matrix - estimation_choi(d, n, m).matrix
                dist = trace_norm(diff) / sym_dim(d, n)
            except CapacityError:
                pass
        rows.append(ConvergenceRow(n, float(p), float(limit - p), dist))
    gaps = [Fraction(1, sym_dim(d, m)) - copy_probability(d, n, m) for n in range(m, n_max + 1)]
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    return ConvergenceReport(d, m, float(limit), tuple(rows), monotone)


def catalog_bound_checks(spec, cert: CausalityCertificate | None = None) -> list[GameReport]:
    """Witness games for a catalog spec: the copy game for copy channels, the lottery for classical."""
    reports = []
    restricted = isinstance(spec, UniversalCloning) or (
        isinstance(spec, SymmetricTrace) and spec.symmetric_domain)
    if restricted:
        reports.append(information_bound_check(spec, copy_game(spec), cert))
    if isinstance(spec, IdealClassical):
        reports.append(information_bound_check(spec, lottery_game(spec.d), cert))
    return reports


__all__ = [
    "ContinuousCopyGame", "ConvergenceReport", "ConvergenceRow", "GameReport", "PayoffGame",
    "assisted_bound", "asymptotic_convergence_report", "catalog_bound_checks",
    "continuous_payoff", "copy_bound", "copy_game", "estimation_choi", "expected_payoff", "f_pi",
    "information_bound_check", "lottery_game", "payoff_spread", "trace_norm",
]
