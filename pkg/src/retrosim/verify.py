"""Invariant batteries run by ``retrosim verify``.

Each check yields a :class:`Check` with a name, a pass flag and the residual
it was judged on. ``perturb`` adds a seeded random Hermitian term of that
Frobenius norm to every catalog Choi operator before it is checked, which a
healthy suite must detect.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Iterator

import numpy as np

from .causality import (analytic_probability, erasure_classifier, max_probability_covariant,
                        max_probability_generic, residual_min_eig, verify_lower_bounds)
from .channels import (ChoiOperator, Estimation, IdealClassical, Identity, QuantumState,
                       SymmetricTrace, UniversalCloning, UniversalNot, apply_map, choi_of,
                       covariance_check, duality_check, random_erasure_channel,
                       random_kraus_channel, random_mp_channel)
from .errors import RetroError
from .infogame import copy_game, information_bound_check, lottery_game
from .linalg import double_ket, from_double_ket, hermitian_eig, max_eig, partial_trace
from .protocol import SUCCESS, induced_choi, realize
from .sampling import ginibre, haar_unitary, random_density_matrix, random_hermitian, rng_from
from .symmetric import symmetric_projector, trace_down_ratio


@dataclasses.dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "residual": float(self.residual)}


@dataclasses.dataclass(frozen=True)
class Context:
    seed: int = 0
    perturb: float = 0.0

    def choi(self, spec) -> ChoiOperator:
        c = choi_of(spec)
        if not self.perturb:
            return c
        h = random_hermitian(c.matrix.shape[0], rng_from(self.seed))
        return c.with_matrix(c.matrix + self.perturb * h)


def _le(name: str, value: float, tol: float) -> Check:
    return Check(name, bool(value <= tol), float(value))


CATALOG = (Identity(2), Identity(3), IdealClassical(2), IdealClassical(3), Estimation(2), Estimation(3),
           UniversalNot(2), UniversalNot(3), SymmetricTrace(2, 2, 1), SymmetricTrace(3, 2, 1),
           SymmetricTrace(2, 2, 1, False), SymmetricTrace(2, 3, 1), SymmetricTrace(2, 4, 2),
           UniversalCloning(2, 1, 2), UniversalCloning(2, 1, 3), UniversalCloning(3, 1, 2))


def _name(spec) -> str:
    fields = [str(v) for v in dataclasses.astuple(spec) if not isinstance(v, bool)]
    return f"{type(spec).__name__}({','.join(fields)})"


def linalg_suite(ctx: Context) -> Iterator[Check]:
    rng = rng_from(ctx.seed)
    a, b, c = (ginibre(2, 2, rng) for _ in range(3))
    yield _le("linalg.kron_associative", float(np.max(np.abs(
        np.kron(np.kron(a, b), c) - np.kron(a, np.kron(b, c))))), 1e-12)
    yield _le("linalg.double_ket_algebra", float(np.linalg.norm(
        np.kron(a, b) @ double_ket(c) - double_ket(a @ c @ b.T))), 1e-12)
    yield _le("linalg.double_ket_roundtrip", float(np.max(np.abs(from_double_ket(double_ket(c), 2, 2) - c))), 0.0)
    rho = random_density_matrix(6, rng)
    yield _le("linalg.partial_trace_preserves_trace",
              abs(np.trace(partial_trace(rho, [2, 3], keep=[1])) - 1.0), 1e-12)
    h = random_hermitian(5, rng)
    w, v = hermitian_eig(h)
    yield _le("linalg.eig_reconstruction", float(np.linalg.norm((v * w) @ v.conj().T - h)), 1e-9)


def symmetric_suite(ctx: Context) -> Iterator[Check]:
    space = symmetric_projector(3, 3)
    p = space.projector
    yield _le("symmetric.idempotent_d3k3", float(np.max(np.abs(p @ p - p))), 1e-10)
    yield _le("symmetric.trace_d3k3", abs(np.trace(p).real - 10), 1e-8)
    for d, n, m in ((2, 2, 1), (2, 3, 2), (3, 2, 1)):
        yield _le(f"symmetric.trace_down_d{d}N{n}m{m}", trace_down_ratio(d, n, m).max_deviation, 1e-10)
    u = haar_unitary(2, rng_from(ctx.seed))
    uk = np.kron(np.kron(u, u), u)
    q = symmetric_projector(2, 3).projector
    yield _le("symmetric.commutes_with_U3", float(np.max(np.abs(uk @ q - q @ uk))), 1e-8)


def channels_suite(ctx: Context) -> Iterator[Check]:
    rng = rng_from(ctx.seed)
    for spec in CATALOG:
        c = ctx.choi(spec)
        yield _le(f"channels.trace_preserving.{_name(spec)}", c.tp_defect(), 1e-8)
        x = random_density_matrix(c.d_in, rng)
        yield _le(f"channels.apply_matches_choi.{_name(spec)}",
                  float(np.max(np.abs(c.apply(x) - apply_map(spec, x)))), 1e-9)
    for d, n, m in ((2, 1, 2), (2, 2, 2), (3, 1, 2), (2, 1, 3), (2, 2, 4)):
        rep = duality_check(d, n, m, perturb=ctx.perturb, seed=ctx.seed)
        yield _le(f"channels.duality_d{d}N{n}M{m}", rep.deviation, 1e-9)
    for d in (2, 3):
        yield _le(f"channels.unot_top_eigenvalue_d{d}",
                  abs(max_eig(ctx.choi(UniversalNot(d)).matrix) - d / (d * d - 1)), 1e-9)


def causality_suite(ctx: Context) -> Iterator[Check]:
    for spec in CATALOG:
        c = ctx.choi(spec)
        exact = float(analytic_probability(spec))
        rho = QuantumState.maximally_mixed(c.d_out)
        yield Check(f"causality.feasible.{_name(spec)}", residual_min_eig(c, exact, rho) >= -1e-8,
                    residual_min_eig(c, exact, rho))
        try:
            cert = max_probability_covariant(c, seed=ctx.seed)
            yield _le(f"causality.covariant.{_name(spec)}", abs(cert.p_max - exact), 1e-9)
        except RetroError:
            yield Check(f"causality.covariant.{_name(spec)}", False, float("inf"))
        try:
            cert = max_probability_generic(c)
            yield _le(f"causality.generic.{_name(spec)}", abs(cert.p_max - exact), 1e-6)
            yield Check(f"causality.lower_bounds.{_name(spec)}", verify_lower_bounds(spec, cert).passed,
                        min(verify_lower_bounds(spec, cert).margins.values()))
        except RetroError:
            yield Check(f"causality.generic.{_name(spec)}", False, float("inf"))
    rng = rng_from(ctx.seed)
    for k in range(4):
        e = choi_of(random_erasure_channel(2, 3, rng))
        k_ch = choi_of(random_kraus_channel(2, 2, 2, rng))
        yield Check(f"causality.erasure_detected.{k}", erasure_classifier(e), 0.0)
        p = max_probability_generic(k_ch).p_max
        yield Check(f"causality.non_erasure_below_one.{k}", (not erasure_classifier(k_ch)) and p < 1 - 1e-6,
                    1 - p)


def protocol_suite(ctx: Context) -> Iterator[Check]:
    for spec in (Identity(2), SymmetricTrace(2, 2, 1), Estimation(2), UniversalNot(2)):
        c = ctx.choi(spec)
        exact = float(analytic_probability(spec))
        rho = QuantumState.maximally_mixed(c.d_out)
        try:
            proto = realize(c, exact, rho)
        except RetroError:
            yield Check(f"protocol.realize.{_name(spec)}", False, float("inf"))
            continue
        dev = np.linalg.norm(induced_choi(proto, SUCCESS).matrix - exact * c.matrix) / np.linalg.norm(c.matrix)
        yield _le(f"protocol.induced_success.{_name(spec)}", float(dev), 1e-9)
        total = sum(induced_choi(proto, k).matrix for k in proto.povm.labels)
        yield _le(f"protocol.outcome_sum.{_name(spec)}",
                  float(np.max(np.abs(total - np.kron(rho.matrix, c.domain_projector)))), 1e-8)


def infogame_suite(ctx: Context) -> Iterator[Check]:
    for d in (2, 3):
        for n in range(1, 5):
            for m in range(1, 5):
                spec = SymmetricTrace(d, n, m) if m <= n else UniversalCloning(d, n, m)
                r = information_bound_check(spec, copy_game(spec),
                                            _exact_cert(spec))
                yield Check(f"infogame.copy_bound.d{d}N{n}M{m}", r.satisfied, r.bound - r.p_max)
    for d in (2, 3, 4):
        r = information_bound_check(IdealClassical(d), lottery_game(d), _exact_cert(IdealClassical(d)))
        yield _le(f"infogame.lottery_equality_d{d}", abs(r.bound - r.p_max), 1e-12)


def _exact_cert(spec):
    return max_probability_covariant(choi_of(spec), samples=2)


def mp_gamma_suite(ctx: Context, count: int = 200) -> Iterator[Check]:
    rng = rng_from(ctx.seed)
    worst = 0.0
    for _ in range(count):
        d_in, d_out = (int(x) for x in rng.integers(2, 5, size=2))
        c = ctx.choi(random_mp_channel(d_in, d_out, rng=rng))
        worst = max(worst, max_eig(c.matrix))
    yield _le(f"mp_gamma.max_eigenvalue_{count}_channels", worst, 1 + 1e-8)


SUITES: dict[str, Callable[[Context], Iterator[Check]]] = {
    "linalg": linalg_suite,
    "symmetric": symmetric_suite,
    "channels": channels_suite,
    "causality": causality_suite,
    "protocol": protocol_suite,
    "infogame": infogame_suite,
    "mp-gamma": mp_gamma_suite,
}


def run(suite: str = "all", seed: int = 0, perturb: float = 0.0) -> list[Check]:
    ctx = Context(seed, perturb)
    names = list(SUITES) if suite == "all" else [suite]
    out = []
    for name in names:
        out.extend(SUITES[name](ctx))
    return out
