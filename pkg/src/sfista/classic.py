"""Classical accelerated proximal gradient (no strong convexity).

With both moduli set to zero the two-sequence solver collapses to the
familiar momentum method: one proximal-gradient step followed by an
extrapolation y + beta (y - y_prev).  Two equivalent schedules drive the
momentum weight, the t-recursion

    t_next = (1 + sqrt(1 + 4 t^2)) / 2,   beta = (t - 1) / t_next,

and its reciprocal alpha = 1/t with

    alpha_next^2 = (1 - alpha_next) alpha^2,
    beta = alpha (1 - alpha) / (alpha^2 + alpha_next).

Both are tied back to the two-sequence coefficients by t_k = a_k / lam
= A_{k+1} / a_k, which `equivalence_check` verifies numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine as _engine
from .errors import ConfigError
from .problems import CompositeProblem

Array = np.ndarray


def t_next(t: float) -> float:
    """Advance the t-schedule: the positive root of t'^2 - t' - t^2 = 0."""
    if t < 1.0:
        raise ValueError("t-schedule values never drop below 1")
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))


def alpha_next(alpha: float) -> float:
    """Advance the alpha-schedule via the cancellation-free root form."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha-schedule values live in (0, 1]")
    a2 = alpha * alpha
    return 2.0 * a2 / (a2 + math.sqrt(a2 * a2 + 4.0 * a2))


@dataclass(frozen=True)
class MomentumSchedule:
    """Current momentum parameter in one of the two equivalent forms."""

    form: str  # "t" | "alpha"
    value: float

    def advance(self) -> "MomentumSchedule":
        if self.form == "t":
            return MomentumSchedule("t", t_next(self.value))
        return MomentumSchedule("alpha", alpha_next(self.value))

    def beta(self, advanced: "MomentumSchedule") -> float:
        """Extrapolation weight between the current and advanced parameter."""
        if self.form == "t":
            return (self.value - 1.0) / advanced.value
        a = self.value
        return a * (1.0 - a) / (a * a + advanced.value)


@dataclass
class ClassicState:
    """State after k classical steps: y_k, y_{k-1}, and the extrapolated point."""

    k: int
    y: Array
    y_prev: Array
    x_tilde: Array
    schedule: MomentumSchedule


def classic_init(x0: Array, form: str = "t") -> ClassicState:
    if form not in ("t", "alpha"):
        raise ConfigError(f"unknown momentum form {form!r}")
    x0 = np.asarray(x0, dtype=float).copy()
    return ClassicState(k=0, y=x0.copy(), y_prev=x0.copy(), x_tilde=x0.copy(),
                        schedule=MomentumSchedule(form, 1.0))


def classic_step(state: ClassicState, problem: CompositeProblem,
                 lf: float) -> ClassicState:
    """One proximal-gradient step plus momentum extrapolation."""
    if lf <= problem.f.curvature:
        raise ConfigError("lf must strictly exceed the curvature bound")
    g = problem.f.grad(state.x_tilde)
    y_new = problem.h.prox(state.x_tilde - g / lf, 1.0 / lf)
    advanced = state.schedule.advance()
    beta = state.schedule.beta(advanced)
    x_tilde = y_new + beta * (y_new - state.y)
    return ClassicState(k=state.k + 1, y=y_new, y_prev=state.y,
                        x_tilde=x_tilde, schedule=advanced)


def classic_run(problem: CompositeProblem, x0: Array, lf: float, iters: int,
                form: str = "t") -> list[ClassicState]:
    """States 0..iters of the classical method (kept for comparison work)."""
    states = [classic_init(x0, form)]
    for _ in range(iters):
        states.append(classic_step(states[-1], problem, lf))
    return states


def equivalence_check(problem: CompositeProblem, x0: Array, lf: float,
                      k_max: int, tol: float = 1e-9,
                      mu_f: float = 0.0, mu_h: float = 0.0) -> float:
    """Maximum relative deviation between the three equivalent formulations.

    Runs the two-sequence solver with zero moduli alongside the t-form and
    alpha-form classical methods and returns the largest relative gap over
    the proximal iterates of both forms, the schedule consistency
    t_k = a_k / lam = A_{k+1} / a_k, and alpha_k * t_k = 1.  The reformulation
    holds only without strong convexity, so nonzero moduli are rejected.
    `tol` is echoed back to callers comparing the result; it does not alter
    the computation.
    """
    if mu_f != 0.0 or mu_h != 0.0:
        raise ConfigError("the classical reformulation requires mu_f = mu_h = 0")
    del tol
    config = _engine.SolverConfig(lf=lf, mu_f=0.0, mu_h=0.0)
    state = _engine.init(problem, config, x0)
    t_state = classic_init(x0, "t")
    a_state = classic_init(x0, "alpha")
    worst = 0.0
    for _ in range(k_max):
        t_k = t_state.schedule.value
        state, outcome = _engine.step(state, problem)
        t_state = classic_step(t_state, problem, lf)
        a_state = classic_step(a_state, problem, lf)
        scale = max(1.0, float(np.linalg.norm(state.y)))
        dev_t = float(np.linalg.norm(state.y - t_state.y)) / scale
        dev_a = float(np.linalg.norm(state.y - a_state.y)) / scale
        # the schedule value before the step equals both coefficient ratios
        dev_sched = max(abs(outcome.a / state.lam - t_k),
                        abs(outcome.A_next / outcome.a - t_k)) / max(1.0, t_k)
        alpha_t = a_state.schedule.value * t_state.schedule.value
        dev_recip = abs(alpha_t - 1.0)
        worst = max(worst, dev_t, dev_a, dev_sched, dev_recip)
    return worst
