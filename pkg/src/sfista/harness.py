"""Verification harness: recorded runs, invariant sweeps, and trace files.

`capture_run` drives the solver step by step keeping every state, which the
invariant sweep and the test suite interrogate.  `invariant_report` evaluates
the identities and a priori bounds the method guarantees on a recorded run
and reports the worst violation of each.  `bounds_suite` measures observed
criterion-firing iterations against the closed-form predictors on a seeded
instance family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import bounds as _bounds
from . import certificates as _cert
from . import engine as _engine
from .errors import GrowthOverflowError
from .problems import (CompositeProblem, eval_phi, format_real, make_instance)

Array = np.ndarray

# Rounding-noise gates.  Once tau amplifies the floating-point noise of x - y
# past the quantities being compared, identity checks measure noise rather
# than the recursion, so they are restricted to iterates below these limits.
CERT_TAU_LIMIT = 1e10
MOVEMENT_A_LIMIT = 1e12

IDENTITY_TOL = 1e-10
COEFF_LOWER_TOL = 1e-10
CERT_IDENTITY_TOL = 1e-8
ETA_FLOOR = -1e-12
MODEL_TOL_SCALE = 1e-8
RATE_SLACK_SCALE = 1e-9
INEQ_REL_SLACK = 1e-9


@dataclass
class RunCapture:
    """Every state of a recorded run plus derived per-iterate quantities."""

    problem: CompositeProblem
    config: _engine.SolverConfig
    states: list
    outcomes: list  # outcomes[k] produced states[k]; None at k = 0
    phi_y: Array
    norm_u: Array  # nan at k = 0
    pairs: list  # None at k = 0
    overflowed: bool = False

    @property
    def iterations(self) -> int:
        return len(self.states) - 1

    def gaps(self) -> Array:
        ref = self.problem.reference_optimum
        if ref is None:
            raise ValueError("gaps need a problem with a reference optimum")
        return self.phi_y - ref.phi_star

    def d0(self) -> float:
        ref = self.problem.reference_optimum
        if ref is None:
            raise ValueError("d0 needs a problem with a reference optimum")
        return float(np.linalg.norm(self.states[0].x0 - ref.x_star))


def capture_run(problem: CompositeProblem, config: _engine.SolverConfig,
                x0: Array, iters: int) -> RunCapture:
    """Run `iters` steps (or fewer on overflow) recording everything."""
    state = _engine.init(problem, config, x0)
    states = [state]
    outcomes: list = [None]
    overflowed = False
    for _ in range(iters):
        try:
            state, outcome = _engine.step(state, problem)
        except GrowthOverflowError:
            overflowed = True
            break
        states.append(state)
        outcomes.append(outcome)
    phi_y = np.array([eval_phi(problem, s.y) for s in states])
    norm_u = np.full(len(states), math.nan)
    pairs: list = [None]
    for k in range(1, len(states)):
        norm_u[k] = _cert.stationarity_residual(states[k], problem).norm
        pairs.append(_cert.residual_pair(states[k]))
    return RunCapture(problem=problem, config=config, states=states,
                      outcomes=outcomes, phi_y=phi_y, norm_u=norm_u,
                      pairs=pairs, overflowed=overflowed)


def checkpoints(k_max: int) -> list:
    """Log-spaced iterate indices 1 .. k_max for sampled checks."""
    picks = sorted({min(k_max, k) for k in
                    (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)
                    if k_max >= 1})
    return [k for k in picks if k >= 1]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    limit: float
    location: Optional[int] = None
    note: str = ""

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        where = f", k = {self.location}" if self.location is not None else ""
        note = f", {self.note}" if self.note else ""
        return (f"{self.name} = {status} (worst {self.worst:.3e}, "
                f"limit {self.limit:.3e}{where}{note})")


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list:
        out = [c.line() for c in self.checks]
        out.append(f"overall = {'pass' if self.overall else 'FAIL'}")
        return out


def _worst_result(name, values, limit, ks=None, note=""):
    values = list(values)
    if not values:
        return CheckResult(name=name, passed=True, worst=-math.inf, limit=limit,
                           note=note or "no applicable iterates")
    idx = int(np.argmax(values))
    worst = float(values[idx])
    location = ks[idx] if ks is not None else None
    return CheckResult(name=name, passed=worst <= limit, worst=worst,
                       limit=limit, location=location, note=note)


def invariant_report(capture: RunCapture, sample_count: int = 200,
                     seed: int = 2718) -> VerificationReport:
    """Evaluate every identity and bound the method guarantees on a run."""
    problem = capture.problem
    config = capture.config
    states = capture.states
    K = capture.iterations
    lf, mu_f, mu = config.lf, config.mu_f, config.mu
    lam = config.lam
    lf_bar = problem.f.curvature
    ref = problem.reference_optimum
    report = VerificationReport()
    ks = list(range(1, K + 1))

    # coefficient recursion: tau_k A_{k+1} / a_k^2 = lf - mu_f
    vals = []
    for k in ks:
        out = capture.outcomes[k]
        prev = states[k - 1]
        # ratio-of-ratios order: tau, A, a all reach ~1e300 under geometric
        # growth, so tau * A would overflow
        ident = (prev.tau / out.a) * (out.A_next / out.a)
        vals.append(abs(ident - 1.0 / lam) * lam)
    report.checks.append(_worst_result("coefficient_identity", vals,
                                       IDENTITY_TOL, ks))

    # tau_k = 1 + mu A_k
    vals = [abs(states[k].tau - (1.0 + mu * states[k].A))
            / max(1.0, states[k].tau) for k in ks]
    report.checks.append(_worst_result("tau_identity", vals, IDENTITY_TOL, ks))

    # A_k >= max(k^2/4, c^(2(k-1))) / (lf - mu_f)
    vals = []
    for k in ks:
        lower = _bounds.coefficient_sum_lower(k, lf, mu_f, mu)
        vals.append((lower - states[k].A) / lower)
    report.checks.append(_worst_result("coefficient_sum_lower", vals,
                                       COEFF_LOWER_TOL, ks))

    if ref is not None:
        gaps = capture.gaps()
        d0 = capture.d0()
        phi_star = ref.phi_star
        c = _bounds.growth_factor(lf, mu_f, mu)
        slack = RATE_SLACK_SCALE * (1.0 + abs(phi_star))

        # phi(y_k) - phi* <= (lf - mu_f) d0^2 / 2 * min(4/k^2, c^(2(1-k)))
        vals = []
        for k in ks:
            envelope = min(4.0 / k**2, c ** (2.0 * (1.0 - k)))
            bound = 0.5 * (lf - mu_f) * d0**2 * envelope
            vals.append(float(gaps[k]) - bound - slack)
        report.checks.append(_worst_result("function_gap_rate", vals, 0.0, ks))

        # (lf - lf_bar)/2 sum A_{i+1} ||y_{i+1} - x_tilde_i||^2
        #     <= d0^2 - A_k (phi(y_k) - phi*)
        vals, gated_ks, running = [], [], 0.0
        for k in ks:
            out = capture.outcomes[k]
            if out.A_next > MOVEMENT_A_LIMIT:
                break
            move = out.y_next - out.x_tilde
            running += out.A_next * float(move @ move)
            lhs = 0.5 * (lf - lf_bar) * running
            rhs = d0**2 - states[k].A * float(gaps[k])
            # the A_k term amplifies the objective's evaluation noise
            noise = states[k].A * 1e-13 * (1.0 + abs(phi_star))
            vals.append(lhs - rhs - slack * (1.0 + d0**2) - noise)
            gated_ks.append(k)
        report.checks.append(_worst_result(
            "movement_bound", vals, 0.0, gated_ks,
            note=f"checked {len(gated_ks)} of {K}"))

        # min_i ||u_i||^2 <= 8 lf^2 d0^2 / ((lf - lf_bar) sum A_i)
        vals, gated_ks = [], []
        running_a, best = 0.0, math.inf
        floor = (1e-9 * lf * (1.0 + d0)) ** 2
        for k in ks:
            running_a += states[k].A
            best = min(best, capture.norm_u[k] ** 2)
            rhs = 8.0 * lf**2 * d0**2 / ((lf - lf_bar) * running_a)
            if rhs < floor:
                break
            vals.append(best - rhs * (1.0 + INEQ_REL_SLACK))
            gated_ks.append(k)
        report.checks.append(_worst_result(
            "min_norm_bound", vals, 0.0, gated_ks,
            note=f"checked {len(gated_ks)} of {K}"))

        # ||x_k - x0|| <= (1/sqrt(tau_k) + 1) d0
        vals = []
        for k in ks:
            st = states[k]
            bound = _bounds.distance_bound_x(st.tau, d0)
            vals.append(float(np.linalg.norm(st.x - st.x0))
                        - bound * (1.0 + INEQ_REL_SLACK) - 1e-12)
        report.checks.append(_worst_result("distance_x_bound", vals, 0.0, ks))

        if mu > 0:
            vals = []
            for k in ks:
                st = states[k]
                bound = _bounds.distance_bound_y(st.A, mu, d0)
                vals.append(float(np.linalg.norm(st.y - st.x0))
                            - bound * (1.0 + INEQ_REL_SLACK) - 1e-12)
            report.checks.append(_worst_result("distance_y_bound", vals, 0.0, ks))

            vals, gated_ks = [], []
            for k in ks:
                st = states[k]
                if st.tau > CERT_TAU_LIMIT:
                    break
                pair = capture.pairs[k]
                v_bound, eta_bound = _bounds.pair_absolute_bounds(st.A, mu, d0)
                vals.append(max(pair.norm - v_bound * (1.0 + INEQ_REL_SLACK),
                                pair.eta - eta_bound * (1.0 + INEQ_REL_SLACK))
                            - 1e-12)
                gated_ks.append(k)
            report.checks.append(_worst_result(
                "pair_absolute_bounds", vals, 0.0, gated_ks,
                note=f"checked {len(gated_ks)} of {K}"))

    # ||u_k|| <= 2 lf ||y_k - x_tilde_{k-1}||
    vals = []
    for k in ks:
        st = states[k]
        envelope = 2.0 * lf * float(np.linalg.norm(st.y - st.x_tilde_prev))
        vals.append(capture.norm_u[k] - envelope * (1.0 + INEQ_REL_SLACK)
                    - 1e-12 * lf)
    report.checks.append(_worst_result("residual_envelope", vals, 0.0, ks))

    # certificate identity: ||A v + y - x0||^2 / tau + 2 A eta = ||y - x0||^2
    vals, gated_ks = [], []
    for k in ks:
        st = states[k]
        if st.tau > CERT_TAU_LIMIT:
            break
        pair = capture.pairs[k]
        shifted = st.A * pair.v + st.y - st.x0
        lhs = float(shifted @ shifted) / st.tau + 2.0 * st.A * pair.eta
        rhs = float((st.y - st.x0) @ (st.y - st.x0))
        vals.append(abs(lhs - rhs) / max(1.0, rhs))
        gated_ks.append(k)
    report.checks.append(_worst_result(
        "certificate_identity", vals, CERT_IDENTITY_TOL, gated_ks,
        note=f"checked {len(gated_ks)} of {K}"))

    # eta_k >= 0 up to rounding
    vals = [-capture.pairs[k].eta for k in ks]
    report.checks.append(_worst_result("eta_nonnegative", vals, -ETA_FLOOR, ks))

    # ||v_k|| and eta_k against their ||y_k - x0|| envelopes
    vals, gated_ks = [], []
    for k in ks:
        st = states[k]
        if st.tau > CERT_TAU_LIMIT:
            break
        pair = capture.pairs[k]
        dist = float(np.linalg.norm(st.y - st.x0))
        v_bound, eta_bound = _bounds.pair_norm_bounds(st.A, st.tau, dist)
        vals.append(max(pair.norm - v_bound * (1.0 + INEQ_REL_SLACK) - 1e-12,
                        pair.eta - eta_bound * (1.0 + INEQ_REL_SLACK) - 1e-12))
        gated_ks.append(k)
    report.checks.append(_worst_result(
        "pair_norm_bounds", vals, 0.0, gated_ks,
        note=f"checked {len(gated_ks)} of {K}"))

    # sampled model checks at log-spaced iterates
    rng = np.random.Generator(np.random.PCG64(seed))
    minor_vals, subgrad_vals, eps_vals, sample_ks = [], [], [], []
    for k in checkpoints(K):
        st = states[k]
        if st.tau > CERT_TAU_LIMIT:
            break
        pair = capture.pairs[k]
        tol = MODEL_TOL_SCALE * (1.0 + abs(capture.phi_y[k]))
        samples = _cert.sample_points(st, problem, sample_count, rng)
        minor_vals.append(_cert.lower_model_gap(st.gamma_model, problem, samples)
                          - tol)
        subgrad_vals.append(_cert.lower_model_violation(
            st.gamma_model, pair, st, problem, samples) - tol)
        eps_vals.append(_cert.check_eps_subgradient(pair, st, problem, samples)
                        - tol)
        sample_ks.append(k)
    note = f"{sample_count} samples at k in {sample_ks}"
    report.checks.append(_worst_result("lower_model_minorizes", minor_vals,
                                       0.0, sample_ks, note=note))
    report.checks.append(_worst_result("model_subgradient", subgrad_vals,
                                       0.0, sample_ks, note=note))
    report.checks.append(_worst_result("eps_subgradient", eps_vals,
                                       0.0, sample_ks, note=note))
    return report


# ---------------------------------------------------------------------------
# Predictor validity suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundsRow:
    label: str
    variant: str
    predicted_k: int
    observed_k: Optional[int]
    passed: bool

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        observed = self.observed_k if self.observed_k is not None else "none"
        return (f"{self.label} {self.variant} = {status} "
                f"(observed {observed}, predicted {self.predicted_k})")


def _suite_instances(seed_base: int):
    recipes = [
        ("elastic_net", dict(m=30, n=50, reg=0.05, ridge=1.0)),
        ("logistic_l2", dict(m=40, n=25, ridge=1.0)),
        ("box_qp", dict(m=30, n=30, diag=True)),
    ]
    for i in range(10):
        kind, kw = recipes[i % len(recipes)]
        kw = dict(kw)
        m = kw.pop("m")
        n = kw.pop("n")
        seed = seed_base + i
        yield f"{kind}[seed={seed}]", make_instance(kind, seed, m, n, **kw)


def suite_criteria(problem: CompositeProblem, d0: float):
    """Scale-aware tolerances for the five criteria on one instance."""
    phi_star = problem.reference_optimum.phi_star
    lf = _engine.DEFAULT_CURVATURE_MARGIN * problem.f.curvature
    return [
        _bounds.Criterion.function_gap(1e-6 * (1.0 + abs(phi_star))),
        _bounds.Criterion.stationarity(1e-3 * (1.0 + lf * d0)),
        _bounds.Criterion.relative(0.1),
        _bounds.Criterion.alternate_relative(0.5),
        _bounds.Criterion.absolute(1e-2 * (1.0 + d0), 1e-2 * (1.0 + d0**2)),
    ]


def predictor_row(label: str, problem: CompositeProblem,
                  criterion: "_bounds.Criterion") -> BoundsRow:
    """Observed first-satisfaction iteration against the predicted count."""
    x0 = np.zeros(problem.dimension)
    d0 = float(np.linalg.norm(x0 - problem.reference_optimum.x_star))
    config = _engine.SolverConfig.for_problem(problem, criterion=criterion,
                                              max_iter=0)
    report = _bounds.predicted_iterations(
        criterion, config.lf, problem.f.curvature, config.mu_f, config.mu, d0=d0
    )
    config = _engine.SolverConfig.for_problem(
        problem, criterion=criterion, max_iter=report.predicted_k,
        trace_every=max(1, report.predicted_k),
    )
    result = _engine.run(problem, config, x0)
    observed = result.state.k if result.reason == "converged" else None
    passed = observed is not None and observed <= report.predicted_k
    return BoundsRow(label=label, variant=criterion.variant,
                     predicted_k=report.predicted_k, observed_k=observed,
                     passed=passed)


def bounds_suite(seed_base: int = 0) -> list:
    """Five criteria against their predictors on ten seeded instances."""
    rows = []
    for label, problem in _suite_instances(seed_base):
        x0 = np.zeros(problem.dimension)
        d0 = float(np.linalg.norm(x0 - problem.reference_optimum.x_star))
        for criterion in suite_criteria(problem, d0):
            rows.append(predictor_row(label, problem, criterion))
    return rows


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

TRACE_COLUMNS = ("k", "a", "A", "tau", "phi_y", "gap", "norm_u", "norm_v",
                 "eta_residual", "elapsed_ns")


def format_trace(records, meta: Optional[dict] = None) -> str:
    """Comma-delimited trace with `# key = value` provenance lines on top."""
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key} = {value}")
    lines.append(",".join(TRACE_COLUMNS))

    def real(v):
        return "" if v is None else format_real(v)

    for r in records:
        lines.append(",".join([
            str(r.k), real(r.a), real(r.A), real(r.tau), real(r.phi_y),
            real(r.gap), real(r.norm_u), real(r.norm_v), real(r.eta_residual),
            str(r.elapsed_ns),
        ]))
    return "\n".join(lines) + "\n"


def write_trace(path, records, meta: Optional[dict] = None) -> None:
    Path(path).write_text(format_trace(records, meta))
