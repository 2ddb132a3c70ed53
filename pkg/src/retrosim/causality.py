"""Maximum probability of simulating a channel from the future to the past.

A channel with Choi operator ``C`` can be simulated with probability ``p``
iff ``p C <= rho0 (x) I_in`` for some state ``rho0``. The largest such ``p``
is ``1 / min{Tr X : X >= 0, X (x) I_in >= C}`` with ``rho0 = X / Tr X``.

Two solvers:

* :func:`max_probability_covariant` for Choi operators invariant under a
  group acting irreducibly on the output, where twirling fixes
  ``rho0 = I / d_out`` and ``p = 1 / (d_out * lambda_max(C))``.
* :func:`max_probability_generic`, a log-barrier Newton method on the
  program above. It returns a feasible ``p`` together with a dual upper
  bound ``p_upper``.
"""

from __future__ import annotations

import dataclasses
from fractions import Fraction

import numpy as np
from scipy import linalg as sla

from .channels import (MEASURE_AND_PREPARE, ChoiOperator, Erasure, Estimation, IdealClassical,
                       Identity, QuantumState, SymmetricTrace, UniversalCloning, UniversalNot,
                       covariance_check)
from .config import TOL
from .errors import NumericError, PreconditionError
from .linalg import dagger, eigvalsh_desc, hermitian_eig, max_eig, min_eig, partial_trace
from .symmetric import sym_dim

COVARIANT = "covariant-analytic"
GENERIC = "generic-numeric"


@dataclasses.dataclass(frozen=True, eq=False)
class CausalityCertificate:
    p_max: float
    rho0: QuantumState
    min_residual_eig: float
    method: str
    p_upper: float
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.min_residual_eig >= -TOL.feasibility

    def near_optimal(self, rel: float = 1e-6) -> bool:
        """True when p_max * (1 + rel) is certified infeasible."""
        return self.p_upper < self.p_max * (1 + rel)


def residual_min_eig(choi: ChoiOperator, p: float, rho0) -> float:
    """Smallest eigenvalue of rho0 (x) I_domain - p C."""
    r = rho0.matrix if isinstance(rho0, QuantumState) else np.asarray(rho0)
    return min_eig(np.kron(r, choi.domain_projector) - p * choi.matrix)


def probability_for_state(choi: ChoiOperator, rho0) -> float:
    """Largest p with p C <= rho0 (x) I for a fixed full-rank rho0.

    Equals 1 / lambda_max((rho0^{-1/2} (x) I) C (rho0^{-1/2} (x) I)).
    """
    r = rho0.matrix if isinstance(rho0, QuantumState) else np.asarray(rho0, dtype=complex)
    w, v = hermitian_eig(r)
    if w[-1] <= 0:
        raise PreconditionError("rho0 must be full rank")
    s = (v / np.sqrt(w)) @ dagger(v)
    c = _on_domain(choi)
    k = np.kron(s, np.eye(c.shape[0] // r.shape[0]))
    top = max_eig(k @ c @ k)
    return 1.0 if top <= 0 else min(1.0, 1.0 / top)


def _domain_basis(choi: ChoiOperator) -> np.ndarray | None:
    p = choi.domain_projector
    if np.allclose(p, np.eye(choi.d_in), atol=TOL.tp):
        return None
    w, v = hermitian_eig(p)
    return v[:, w > 0.5]


def _on_domain(choi: ChoiOperator) -> np.ndarray:
    basis = _domain_basis(choi)
    if basis is None:
        return choi.matrix
    k = np.kron(np.eye(choi.d_out), basis)
    return dagger(k) @ choi.matrix @ k


def _trivial_certificate(choi: ChoiOperator, method: str) -> CausalityCertificate:
    rho0 = QuantumState.maximally_mixed(choi.d_out)
    return CausalityCertificate(1.0, rho0, residual_min_eig(choi, 1.0, rho0), method, 1.0)


def _is_zero(choi: ChoiOperator) -> bool:
    return float(np.max(np.abs(choi.matrix))) <= TOL.rank


def max_probability_covariant(choi: ChoiOperator, samples: int = 20, seed=0) -> CausalityCertificate:
    if _is_zero(choi):
        return _trivial_certificate(choi, COVARIANT)
    if choi.symmetry is None:
        raise PreconditionError("Choi operator declares no symmetry; use max_probability_generic")
    report = covariance_check(choi, samples=samples, seed=seed)
    if not report.passed:
        raise PreconditionError(
            f"covariance check failed (residual {report.residual:.3e}); use max_probability_generic")
    gamma = max_eig(choi.matrix)
    p = min(1.0, 1.0 / (choi.d_out * gamma))
    rho0 = QuantumState.maximally_mixed(choi.d_out)
    return CausalityCertificate(p, rho0, residual_min_eig(choi, p, rho0), COVARIANT, p)


# ---------------------------------------------------------------------------
# barrier method

def _chol(s: np.ndarray):
    try:
        return sla.cho_factor(s, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None


def _logdet(factor) -> float:
    return 2.0 * float(np.sum(np.log(np.abs(np.diag(factor[0])))))


def _solve_min_trace(c: np.ndarray, d_out: int, d_in: int, gap_tol: float,
                     max_newton: int) -> tuple[np.ndarray, float, int]:
    """min Tr X s.t. X (x) I - c > 0 along the central path.

    Returns (X, dual lower bound on the optimum, Newton steps).
    """
    n = d_out * d_in
    eye_in = np.eye(d_in)
    x = 2.0 * np.eye(d_out, dtype=complex)
    t = 1.0
    mu = 16.0
    steps = 0

    def slack(xm):
        return np.kron(xm, eye_in) - c

    factor = _chol(slack(x))
    while True:
        decrement = np.inf
        for _ in range(max_newton):
            s_inv = sla.cho_solve(factor, np.eye(n, dtype=complex), check_finite=False)
            s_inv = (s_inv + dagger(s_inv)) / 2
            tens = s_inv.reshape(d_out, d_in, d_out, d_in)
            grad = t * np.eye(d_out) - np.einsum("aibi->ab", tens)
            hess = np.einsum("aibj,cjei->aebc", tens, tens).reshape(d_out ** 2, d_out ** 2)
            try:
                step = np.linalg.solve(hess, -grad.reshape(-1)).reshape(d_out, d_out)
            except np.linalg.LinAlgError as exc:
                raise NumericError(f"singular Newton system: {exc}") from exc
            step = (step + dagger(step)) / 2
            slope = float(np.real(np.vdot(grad, step)))
            # Newton decrement is affine invariant, so this threshold does not depend on t
            decrement = -slope / 2
            if decrement < 1e-10:
                break
            f0 = t * np.trace(x).real - _logdet(factor)
            s = 1.0
            while True:
                trial = x + s * step
                tf = _chol(slack(trial))
                if tf is not None:
                    f1 = t * np.trace(trial).real - _logdet(tf)
                    if f1 <= f0 + 0.25 * s * slope:
                        break
                s *= 0.5
                if s < 1e-16:
                    tf = None
                    break
            steps += 1
            if tf is None:
                break
            x, factor = trial, tf
        else:
            # at large t roundoff puts a floor under the decrement; only fail well above it
            if decrement > 1e-6:
                raise NumericError("barrier centering did not converge",
                                   diagnostics={"t": t, "newton_steps": steps})
        if n / t < gap_tol * max(np.trace(x).real, 1e-300):
            break
        t *= mu

    s_inv = sla.cho_solve(factor, np.eye(n, dtype=complex), check_finite=False)
    z = (s_inv + dagger(s_inv)) / (2 * t)
    y = partial_trace(z, [d_out, d_in], keep=[0])
    w, v = hermitian_eig(y)
    y_isqrt = (v / np.sqrt(np.clip(w, 1e-300, None))) @ dagger(v)
    k = np.kron(y_isqrt, eye_in)
    z = k @ z @ k
    lower = float(np.real(np.trace(c @ z)))
    return (x + dagger(x)) / 2, lower, steps


def max_probability_generic(choi: ChoiOperator, tol: float = 1e-10,
                            max_newton: int = 50) -> CausalityCertificate:
    """Solve the causality bound numerically for any Choi operator.

    ``tol`` is the relative duality gap targeted by the barrier method.
    """
    if _is_zero(choi):
        return _trivial_certificate(choi, GENERIC)
    if erasure_classifier(choi, tol=1e-12):
        # C = rho (x) I is feasible at p = 1 with rho0 = rho, and p <= 1 always
        rho0 = QuantumState(marginal_state(choi))
        return CausalityCertificate(1.0, rho0, residual_min_eig(choi, 1.0, rho0), GENERIC, 1.0)
    c = _on_domain(choi)
    d_out = choi.d_out
    d_in = c.shape[0] // d_out
    scale = max_eig(c)
    x, lower, steps = _solve_min_trace(c / scale, d_out, d_in, tol, max_newton)
    rho0 = x / np.trace(x).real
    p = probability_for_state(choi, rho0)
    rho0_state = QuantumState(rho0)
    p_upper = min(1.0, 1.0 / (scale * lower)) if lower > 0 else 1.0
    lo_bracket = max(1.0 / choi.d_in ** 2, 1.0 / d_out ** 2)
    if not (lo_bracket - 1e-8 <= p <= 1.0 + 1e-12) or p_upper < p * (1 - 1e-9):
        raise NumericError("generic solver left the provable bracket",
                           bracket=(max(lo_bracket, p), max(p_upper, p)),
                           diagnostics={"p": p, "p_upper": p_upper, "newton_steps": steps})
    return CausalityCertificate(p, rho0_state, residual_min_eig(choi, p, rho0_state), GENERIC,
                                max(p_upper, p), steps)


def max_probability(choi: ChoiOperator, method: str = "auto", **kwargs) -> CausalityCertificate:
    """Dispatch: ``auto`` uses the covariant path when the Choi operator declares a symmetry."""
    if method == "covariant":
        return max_probability_covariant(choi, **kwargs)
    if method == "generic":
        return max_probability_generic(choi, **kwargs)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if choi.symmetry is not None:
        try:
            return max_probability_covariant(choi)
        except PreconditionError:
            pass
    return max_probability_generic(choi)


# ---------------------------------------------------------------------------
# closed forms, lower bounds, erasure test

def copy_probability(d: int, n: int, m: int) -> Fraction:
    """d_+^{|N-M|} / (d_+^N d_+^M) for trace (M <= N) and cloning (M >= N) channels."""
    return Fraction(sym_dim(d, abs(n - m)), sym_dim(d, n) * sym_dim(d, m))


def analytic_probability(spec) -> Fraction | None:
    """Known closed-form optimum for catalog channels, else None."""
    match spec:
        case Identity(d):
            return Fraction(1, d * d)
        case IdealClassical(d) | Estimation(d):
            return Fraction(1, d)
        case UniversalNot(d):
            return 1 - Fraction(1, d * d)
        case Erasure():
            return Fraction(1)
        case SymmetricTrace(d, 2, 1, False):
            return Fraction(2, d * (d + 1))
        case SymmetricTrace(d, n, m) | UniversalCloning(d, n, m):
            return copy_probability(d, n, m)
    return None


@dataclasses.dataclass(frozen=True)
class LowerBoundReport:
    p_max: float
    bounds: dict
    margins: dict
    passed: bool


def verify_lower_bounds(spec, cert: CausalityCertificate, slack: float = 1e-8) -> LowerBoundReport:
    """Check p_max against max{1/d_in^2, 1/d_out^2} and the classical / m&p refinements."""
    d_in, d_out = spec.input_dim, spec.output_dim
    bounds = {"quantum": max(1.0 / d_in ** 2, 1.0 / d_out ** 2)}
    if isinstance(spec, IdealClassical):
        bounds["classical"] = max(1.0 / d_in, 1.0 / d_out)
    if isinstance(spec, MEASURE_AND_PREPARE):
        bounds["measure_prepare"] = 1.0 / d_out
    margins = {k: cert.p_max - v for k, v in bounds.items()}
    return LowerBoundReport(cert.p_max, bounds, margins, all(m >= -slack for m in margins.values()))


def marginal_state(choi: ChoiOperator) -> np.ndarray:
    """Tr_in C / Tr I_domain: the output of C on the maximally mixed domain state."""
    return partial_trace(choi.matrix, choi.dims, keep=[0]) / np.trace(choi.domain_projector).real


def erasure_classifier(choi: ChoiOperator, tol: float = 1e-8) -> bool:
    """True iff C = rho (x) I_domain with rho = Tr_in C / Tr I_domain."""
    dom = choi.domain_projector
    rho = marginal_state(choi)
    dev = np.linalg.norm(choi.matrix - np.kron(rho, dom))
    return bool(dev <= tol * max(1.0, float(np.linalg.norm(choi.matrix))))


def choi_spectrum(choi: ChoiOperator) -> np.ndarray:
    return eigvalsh_desc(choi.matrix)
