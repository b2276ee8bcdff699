"""Accelerated proximal solver for phi = f + h exploiting strong convexity.

Each step extrapolates between two running sequences with weights produced by
a scalar coefficient recursion, takes one proximal-gradient step from the
extrapolated point, and folds the step's lower minorant into an aggregated
quadratic model.  With no strong convexity the scheme reduces to the familiar
O(1/k^2) accelerated method; any positive total modulus mu turns the
coefficient growth geometric and the rate linear.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bounds as _bounds
from . import certificates as _cert
from .errors import ConfigError, GrowthOverflowError, InvalidStartError
from .problems import CompositeProblem, eval_phi

Array = np.ndarray

# Halting threshold for the coefficient sum; beyond this the geometric growth
# would overflow double precision a few iterations later.
OVERFLOW_LIMIT = 1e300

DEFAULT_CURVATURE_MARGIN = 1.25


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    lf must strictly dominate the curvature bound of f; mu_f and mu_h are the
    strong-convexity moduli the solver is allowed to exploit and may be any
    values in [0, modulus of f] and [0, modulus of h].
    """

    lf: float
    mu_f: float = 0.0
    mu_h: float = 0.0
    max_iter: int = 10000
    criterion: Optional["_bounds.Criterion"] = None
    trace_every: int = 1

    @property
    def mu(self) -> float:
        return self.mu_f + self.mu_h

    @property
    def lam(self) -> float:
        return 1.0 / (self.lf - self.mu_f)

    @classmethod
    def for_problem(cls, problem: CompositeProblem, lf: Optional[float] = None,
                    mu_f: Optional[float] = None, mu_h: Optional[float] = None,
                    **kwargs) -> "SolverConfig":
        """Defaults derived from the problem's oracle constants."""
        if lf is None:
            lf = DEFAULT_CURVATURE_MARGIN * problem.f.curvature
        if mu_f is None:
            mu_f = problem.f.mu
        if mu_h is None:
            mu_h = problem.h.mu
        return cls(lf=float(lf), mu_f=float(mu_f), mu_h=float(mu_h), **kwargs)


@dataclass
class IterateState:
    """Full state after k steps.

    x_tilde_prev is the extrapolated point the latest proximal step was taken
    from (None before the first step); a_prev is the coefficient that advanced
    the state to k.  gamma_model aggregates the per-step minorants of phi.
    """

    k: int
    lf: float
    mu_f: float
    lam: float
    mu: float
    a_prev: Optional[float]
    A: float
    tau: float
    x: Array
    y: Array
    x_tilde_prev: Optional[Array]
    x0: Array
    gamma_model: _cert.LowerModel


@dataclass(frozen=True)
class StepOutcome:
    """Quantities produced by a single step."""

    a: float
    A_next: float
    tau_next: float
    x_tilde: Array
    y_next: Array
    x_next: Array


@dataclass(frozen=True)
class TraceRecord:
    """One trace row; certificate fields are None where not computed."""

    k: int
    a: float
    A: float
    tau: float
    phi_y: float
    gap: Optional[float]
    norm_u: Optional[float]
    norm_v: Optional[float]
    eta_residual: Optional[float]
    elapsed_ns: int


@dataclass
class RunResult:
    state: IterateState
    reason: str  # "converged" | "max_iter" | "growth_overflow"
    trace: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return self.state.k


def init(problem: CompositeProblem, config: SolverConfig, x0: Array) -> IterateState:
    """Validated initial state (k = 0, zero coefficient sum, unit tau)."""
    if config.lf <= problem.f.curvature:
        raise ConfigError(
            f"lf = {config.lf:g} must strictly exceed the curvature bound "
            f"{problem.f.curvature:g}"
        )
    if not 0.0 <= config.mu_f <= problem.f.mu:
        raise ConfigError(
            f"mu_f = {config.mu_f:g} outside [0, {problem.f.mu:g}]"
        )
    if not 0.0 <= config.mu_h <= problem.h.mu:
        raise ConfigError(
            f"mu_h = {config.mu_h:g} outside [0, {problem.h.mu:g}]"
        )
    if config.max_iter < 0:
        raise ConfigError("max_iter must be nonnegative")
    if config.trace_every < 1:
        raise ConfigError("trace_every must be a positive integer")
    if config.criterion is not None:
        config.criterion.validate(problem)
    x0 = np.asarray(x0, dtype=float).copy()
    if x0.shape != (problem.dimension,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({problem.dimension},)")
    if math.isinf(problem.h.value(x0)):
        raise InvalidStartError("x0 lies outside the effective domain of h")
    return IterateState(
        k=0,
        lf=config.lf,
        mu_f=config.mu_f,
        lam=config.lam,
        mu=config.mu,
        a_prev=None,
        A=0.0,
        tau=1.0,
        x=x0,
        y=x0.copy(),
        x_tilde_prev=None,
        x0=x0.copy(),
        gamma_model=_cert.zero_model(problem.dimension, config.mu),
    )


def _next_coefficients(lam: float, tau: float, A: float, mu: float):
    """Advance the scalar recursion by one step.

    a solves a^2 / (lam * tau) - a - A = 0; the root formula is factored so
    nothing overflows before A itself approaches the halting limit.
    """
    lt = lam * tau
    a = 0.5 * lt * (1.0 + math.sqrt(1.0 + 4.0 * A / lt))
    A_next = A + a
    if A_next > OVERFLOW_LIMIT:
        raise GrowthOverflowError(
            f"coefficient sum exceeded {OVERFLOW_LIMIT:g} (geometric growth)"
        )
    tau_next = 1.0 + mu * A_next
    return a, A_next, tau_next


def step_coefficients(state: IterateState):
    """Coefficients (a, A_next, tau_next) the next step will use."""
    return _next_coefficients(state.lam, state.tau, state.A, state.mu)


def step(state: IterateState, problem: CompositeProblem):
    """One accelerated step; returns the new state and the step quantities."""
    a, A_next, tau_next = step_coefficients(state)
    if state.A == 0.0:
        x_tilde = state.x.copy()
    else:
        x_tilde = (state.A * state.y + a * state.x) / A_next
    g = problem.f.grad(x_tilde)
    y_next = problem.h.prox(x_tilde - g / state.lf, 1.0 / state.lf)
    x_next = (
        (a / state.lam) * (y_next - x_tilde)
        + state.mu * a * y_next
        + state.tau * state.x
    ) / tau_next
    model = _cert.lower_model_update(
        state.gamma_model,
        a=a,
        x_tilde=x_tilde,
        y_next=y_next,
        grad_at_tilde=g,
        f_at_tilde=problem.f.value(x_tilde),
        h_at_y_next=problem.h.value(y_next),
        lam=state.lam,
        mu=state.mu,
        mu_f=state.mu_f,
    )
    new_state = IterateState(
        k=state.k + 1,
        lf=state.lf,
        mu_f=state.mu_f,
        lam=state.lam,
        mu=state.mu,
        a_prev=a,
        A=A_next,
        tau=tau_next,
        x=x_next,
        y=y_next,
        x_tilde_prev=x_tilde,
        x0=state.x0,
        gamma_model=model,
    )
    outcome = StepOutcome(a=a, A_next=A_next, tau_next=tau_next,
                          x_tilde=x_tilde, y_next=y_next, x_next=x_next)
    return new_state, outcome


def _trace_record(problem: CompositeProblem, state: IterateState,
                  certs: Optional[_cert.CertificateBundle],
                  started_ns: int) -> TraceRecord:
    # the recorded a is the coefficient the NEXT step would use, so a single
    # row checks tau * (A + a) / a^2 = 1 / lam on its own
    try:
        a, _, _ = step_coefficients(state)
    except GrowthOverflowError:
        a = math.inf
    phi_y = eval_phi(problem, state.y)
    gap = None
    if problem.reference_optimum is not None:
        gap = phi_y - problem.reference_optimum.phi_star
    norm_u = norm_v = eta = None
    if certs is not None:
        if certs.stationarity is not None:
            norm_u = certs.stationarity.norm
        if certs.pair is not None:
            norm_v = certs.pair.norm
            eta = certs.pair.eta
    return TraceRecord(k=state.k, a=a, A=state.A, tau=state.tau, phi_y=phi_y,
                       gap=gap, norm_u=norm_u, norm_v=norm_v, eta_residual=eta,
                       elapsed_ns=time.perf_counter_ns() - started_ns)


def run(problem: CompositeProblem, config: SolverConfig, x0: Array) -> RunResult:
    """Iterate until the stopping criterion fires or a cap is reached.

    Certificates are computed only when the active criterion or the trace
    needs them.  Every trace_every-th iteration (and the final one) appends a
    TraceRecord.
    """
    started_ns = time.perf_counter_ns()
    state = init(problem, config, x0)
    criterion = config.criterion
    trace: list[TraceRecord] = []

    def record(st, certs):
        trace.append(_trace_record(problem, st, certs, started_ns))

    record(state, None)
    if criterion is not None and criterion.variant == "function_gap":
        if _bounds.check(criterion, state, _cert.CertificateBundle(), problem):
            return RunResult(state=state, reason="converged", trace=trace)

    reason = "max_iter"
    for _ in range(config.max_iter):
        try:
            state, _ = step(state, problem)
        except GrowthOverflowError:
            reason = "growth_overflow"
            break
        tracing = state.k % config.trace_every == 0
        need_u = tracing or (criterion is not None
                             and criterion.variant == "stationarity")
        need_pair = tracing or (criterion is not None and criterion.variant in
                                ("relative", "alternate_relative", "absolute"))
        certs = _cert.bundle(state, problem, stationarity=need_u,
                             residual=need_pair)
        if tracing:
            record(state, certs)
        if criterion is not None and _bounds.check(criterion, state, certs, problem):
            reason = "converged"
            if not tracing:
                record(state, certs)
            return RunResult(state=state, reason=reason, trace=trace)
    if not trace or trace[-1].k != state.k:
        certs = None
        if state.k >= 1:
            certs = _cert.bundle(state, problem)
        record(state, certs)
    return RunResult(state=state, reason=reason, trace=trace)


@dataclass(frozen=True)
class CoefficientSchedule:
    """Coefficient recursion run in isolation (no oracle calls).

    a[k] is the coefficient taken from state k, so A[k + 1] = A[k] + a[k];
    tau[k] = 1 + mu * A[k].  `overflowed` marks an early halt at the
    floating-point safety limit.
    """

    a: Array
    A: Array
    tau: Array
    overflowed: bool


def coefficient_schedule(lf: float, mu_f: float, mu_h: float,
                         k_max: int) -> CoefficientSchedule:
    if lf <= mu_f:
        raise ConfigError("lf must strictly exceed mu_f")
    lam = 1.0 / (lf - mu_f)
    mu = mu_f + mu_h
    a_list: list[float] = []
    A_list = [0.0]
    tau_list = [1.0]
    overflowed = False
    for _ in range(k_max):
        try:
            a, A_next, tau_next = _next_coefficients(lam, tau_list[-1],
                                                     A_list[-1], mu)
        except GrowthOverflowError:
            overflowed = True
            break
        a_list.append(a)
        A_list.append(A_next)
        tau_list.append(tau_next)
    return CoefficientSchedule(a=np.array(a_list), A=np.array(A_list),
                               tau=np.array(tau_list), overflowed=overflowed)
