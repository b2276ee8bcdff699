"""Stopping criteria and closed-form iteration predictors.

Every criterion is a cheap test on the current iterate and its certificates.
For each one there is a matching worst-case predictor: an explicit iteration
count by which the criterion is guaranteed to fire, derived from the lower
bound on the coefficient sum

    A_k >= max(k^2 / 4, c^(2 (k - 1))) / (lf - mu_f),
    c = 1 + sqrt(mu / (lf - mu_f)) / 2.

Predictors never run the solver; they evaluate closed forms and round up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import CertificateUndefinedError, ConfigError
from .problems import CompositeProblem, eval_phi

if TYPE_CHECKING:  # pragma: no cover
    from .certificates import CertificateBundle
    from .engine import IterateState

VARIANTS = ("function_gap", "stationarity", "relative", "alternate_relative",
            "absolute")

# Slop subtracted before ceil so closed forms that land exactly on an integer
# are not bumped up by the last bit of rounding.
_CEIL_SLOP = 1e-9


@dataclass(frozen=True)
class Criterion:
    """Stopping rule selector with its tolerance(s).

    tol carries the variant's main tolerance: eps_bar for function_gap, rho
    for stationarity, sigma_tilde for relative, sigma for alternate_relative,
    eps for absolute.  eta_tol is used by the absolute variant only.
    """

    variant: str
    tol: float
    eta_tol: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown criterion variant {self.variant!r}")
        if not self.tol > 0:
            raise ConfigError("criterion tolerance must be positive")
        if self.variant == "absolute":
            if self.eta_tol is None or not self.eta_tol > 0:
                raise ConfigError("absolute criterion needs a positive eta_tol")
        elif self.eta_tol is not None:
            raise ConfigError(f"eta_tol does not apply to {self.variant!r}")

    def validate(self, problem: CompositeProblem) -> None:
        if self.variant == "function_gap" and problem.reference_optimum is None:
            raise ConfigError(
                "function_gap criterion needs a problem with a reference optimum"
            )

    @classmethod
    def function_gap(cls, eps_bar: float) -> "Criterion":
        return cls("function_gap", eps_bar)

    @classmethod
    def stationarity(cls, rho: float) -> "Criterion":
        return cls("stationarity", rho)

    @classmethod
    def relative(cls, sigma_tilde: float) -> "Criterion":
        return cls("relative", sigma_tilde)

    @classmethod
    def alternate_relative(cls, sigma: float) -> "Criterion":
        return cls("alternate_relative", sigma)

    @classmethod
    def absolute(cls, eps: float, eta_tol: float) -> "Criterion":
        return cls("absolute", eps, eta_tol)


def check(criterion: Criterion, state: "IterateState",
          certificates: "CertificateBundle", problem: CompositeProblem) -> bool:
    """Whether the criterion holds at the current iterate."""
    v = criterion.variant
    if v == "function_gap":
        if problem.reference_optimum is None:
            raise ConfigError("function_gap check needs a reference optimum")
        gap = eval_phi(problem, state.y) - problem.reference_optimum.phi_star
        return gap <= criterion.tol
    if v == "stationarity":
        stat = certificates.stationarity
        if stat is None:
            raise CertificateUndefinedError("criterion needs the stationarity residual")
        return stat.norm <= criterion.tol
    pair = certificates.pair
    if pair is None:
        raise CertificateUndefinedError("criterion needs the residual pair")
    lhs = pair.norm**2 + 2.0 * pair.eta
    if v == "relative":
        dist = float(np.linalg.norm(state.y - state.x0))
        return lhs <= criterion.tol * dist**2
    if v == "alternate_relative":
        shifted = float(np.linalg.norm(pair.v + state.y - state.x0))
        return lhs <= criterion.tol * shifted**2
    # absolute
    return pair.norm <= criterion.tol and pair.eta <= criterion.eta_tol


@dataclass(frozen=True)
class BoundReport:
    """Predicted iteration count plus the constants behind it."""

    criterion: Criterion
    predicted_k: int
    branch: str  # "polynomial" | "logarithmic"
    constants: dict = field(default_factory=dict)


def log_plus_one(x: float) -> float:
    """max(ln x, 1), the clamped logarithm used by the geometric predictors."""
    if x <= 0:
        raise ValueError("log_plus_one needs a positive argument")
    return max(math.log(x), 1.0)


def growth_factor(lf: float, mu_f: float, mu: float) -> float:
    """Per-iteration geometric factor c of the coefficient sum."""
    _validate_constants(lf, mu_f, mu)
    return 1.0 + 0.5 * math.sqrt(mu / (lf - mu_f))


def _validate_constants(lf: float, mu_f: float, mu: float) -> None:
    if mu_f < 0 or mu < 0:
        raise ConfigError("strong-convexity moduli must be nonnegative")
    if lf <= mu_f:
        raise ConfigError("lf must strictly exceed mu_f")


def _ceil_clamped(value: float) -> int:
    if math.isinf(value):
        raise ConfigError("predictor evaluated to infinity")
    return max(1, math.ceil(value - _CEIL_SLOP))


def _branches(a_target: float, lf: float, mu_f: float, mu: float):
    """(polynomial, logarithmic) iteration branches guaranteeing A_k >= a_target."""
    scaled = (lf - mu_f) * a_target
    poly = 2.0 * math.sqrt(scaled)
    logb = math.inf
    if mu > 0 and scaled > 0:
        logb = (0.5 + math.sqrt((lf - mu_f) / mu)) * log_plus_one(scaled) + 1.0
    return poly, logb


def iters_for_a(a_target: float, lf: float, mu_f: float, mu: float) -> int:
    """Iterations guaranteeing the coefficient sum reaches a_target."""
    _validate_constants(lf, mu_f, mu)
    if a_target <= 0:
        return 1
    poly, logb = _branches(a_target, lf, mu_f, mu)
    return _ceil_clamped(min(poly, logb))


def _report(criterion, a_target, lf, mu_f, mu, constants) -> BoundReport:
    poly, logb = _branches(max(a_target, 0.0), lf, mu_f, mu) \
        if a_target > 0 else (0.0, math.inf)
    branch = "polynomial" if poly <= logb else "logarithmic"
    predicted = _ceil_clamped(min(poly, logb)) if a_target > 0 else 1
    constants = dict(constants)
    constants["log_base"] = math.e
    return BoundReport(criterion=criterion, predicted_k=predicted,
                       branch=branch, constants=constants)


def bound_function_gap(d0: float, eps_bar: float, lf: float, mu_f: float,
                       mu: float) -> BoundReport:
    """Iterations until phi(y_k) - phi* <= eps_bar is guaranteed."""
    _validate_constants(lf, mu_f, mu)
    if d0 < 0:
        raise ConfigError("d0 must be nonnegative")
    criterion = Criterion.function_gap(eps_bar)
    a_target = d0**2 / (2.0 * eps_bar)
    return _report(criterion, a_target, lf, mu_f, mu, {"abar": a_target})


def bound_stationarity(d0: float, rho: float, lf: float, lf_bar: float,
                       mu_f: float, mu: float) -> BoundReport:
    """Iterations until min_i ||u_i|| <= rho is guaranteed."""
    _validate_constants(lf, mu_f, mu)
    if lf <= lf_bar:
        raise ConfigError("lf must strictly exceed the curvature bound lf_bar")
    if d0 < 0:
        raise ConfigError("d0 must be nonnegative")
    criterion = Criterion.stationarity(rho)
    zeta = 8.0 * lf**2 * (lf - mu_f) / (lf - lf_bar)
    c = growth_factor(lf, mu_f, mu)
    ratio = zeta * d0**2 / rho**2
    poly = (12.0 * ratio) ** (1.0 / 3.0)
    logb = math.inf
    if mu > 0:
        logb = (1.0 + 2.0 * math.sqrt((lf - mu_f) / mu)) \
            * math.log(1.0 + ratio * (c**2 - 1.0))
    branch = "polynomial" if poly <= logb else "logarithmic"
    predicted = _ceil_clamped(min(poly, logb))
    return BoundReport(criterion=criterion, predicted_k=predicted, branch=branch,
                       constants={"zeta": zeta, "c": c, "log_base": math.e})


def abar_relative(mu: float, sigma_tilde: float) -> float:
    """Coefficient-sum threshold for the relative criterion.

    The positive root of sigma_tilde A^2 - (2 mu + 1) A - 4 = 0: once the
    coefficient sum reaches it, ||v||^2 + 2 eta <= sigma_tilde ||y - x0||^2.
    """
    if mu < 0:
        raise ConfigError("mu must be nonnegative")
    if not sigma_tilde > 0:
        raise ConfigError("sigma_tilde must be positive")
    b = 2.0 * mu + 1.0
    return (b + math.sqrt(b**2 + 16.0 * sigma_tilde)) / (2.0 * sigma_tilde)


def bound_relative(sigma_tilde: float, lf: float, mu_f: float,
                   mu: float) -> BoundReport:
    """Iterations until the relative criterion is guaranteed."""
    _validate_constants(lf, mu_f, mu)
    criterion = Criterion.relative(sigma_tilde)
    a_target = abar_relative(mu, sigma_tilde)
    return _report(criterion, a_target, lf, mu_f, mu, {"abar": a_target})


def bound_alternate_relative(mu: float, sigma: float, lf: float,
                             mu_f: float) -> BoundReport:
    """Iterations until the alternate relative criterion is guaranteed."""
    _validate_constants(lf, mu_f, mu)
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    criterion = Criterion.alternate_relative(sigma)
    shrink = (1.0 + math.sqrt(sigma)) ** 2
    sigma_tilde = sigma / shrink
    cal_a = (2.0 * mu + 3.0) * shrink / sigma
    # the alternate threshold dominates the plain relative one
    assert abar_relative(mu, sigma_tilde) <= cal_a * (1.0 + 1e-12)
    return _report(criterion, cal_a, lf, mu_f, mu,
                   {"cal_a": cal_a, "sigma_tilde": sigma_tilde})


def bound_absolute(d0: float, eps: float, eta_tol: float, lf: float,
                   mu_f: float, mu: float) -> BoundReport:
    """Iterations until ||v_k|| <= eps and eta_k <= eta_tol are guaranteed.

    Requires mu > 0; with no strong convexity the closed form does not exist.
    """
    _validate_constants(lf, mu_f, mu)
    if mu == 0:
        raise ConfigError("the absolute-criterion bound requires mu > 0")
    if d0 < 0:
        raise ConfigError("d0 must be nonnegative")
    criterion = Criterion.absolute(eps, eta_tol)
    big_b = 1.0 + 8.0 * (lf - mu_f) / mu
    big_m = big_b**2 * (lf - mu_f)
    constants = {"big_m": big_m, "log_base": math.e}
    if d0 == 0:
        return BoundReport(criterion=criterion, predicted_k=1,
                           branch="polynomial", constants=constants)
    poly = 8.0 * (
        1.0 / math.sqrt(eps)
        + math.sqrt(mu * d0) / eps
        + math.sqrt(d0) / math.sqrt(eta_tol)
    ) * math.sqrt(big_m * d0)
    inner = 16.0 * (1.0 / eps + mu * d0 / eps**2 + d0 / eta_tol) * big_m * d0
    logb = (0.5 + math.sqrt((lf - mu_f) / mu)) * log_plus_one(inner) + 1.0
    branch = "polynomial" if poly <= logb else "logarithmic"
    predicted = _ceil_clamped(min(poly, logb))
    return BoundReport(criterion=criterion, predicted_k=predicted, branch=branch,
                       constants=constants)


def predicted_iterations(criterion: Criterion, lf: float, lf_bar: float,
                         mu_f: float, mu: float,
                         d0: Optional[float] = None) -> BoundReport:
    """Dispatch a criterion to its predictor (d0 required where it appears)."""
    v = criterion.variant
    if v == "relative":
        return bound_relative(criterion.tol, lf, mu_f, mu)
    if v == "alternate_relative":
        return bound_alternate_relative(mu, criterion.tol, lf, mu_f)
    if d0 is None:
        raise ConfigError(f"the {v} predictor needs d0")
    if v == "function_gap":
        return bound_function_gap(d0, criterion.tol, lf, mu_f, mu)
    if v == "stationarity":
        return bound_stationarity(d0, criterion.tol, lf, lf_bar, mu_f, mu)
    return bound_absolute(d0, criterion.tol, criterion.eta_tol, lf, mu_f, mu)


# ---------------------------------------------------------------------------
# Per-iterate a priori bounds (used by the verification harness and tests)
# ---------------------------------------------------------------------------

def coefficient_sum_lower(k: int, lf: float, mu_f: float, mu: float) -> float:
    """Proven lower bound on the coefficient sum after k steps."""
    _validate_constants(lf, mu_f, mu)
    if k < 1:
        return 0.0
    c = growth_factor(lf, mu_f, mu)
    poly = k * k / 4.0
    geo = c ** (2.0 * (k - 1.0))
    return max(poly, geo) / (lf - mu_f)


def distance_bound_x(tau: float, d0: float) -> float:
    """Bound on ||x_k - x0|| in terms of tau_k and d0."""
    return (1.0 / math.sqrt(tau) + 1.0) * d0


def distance_bound_y(a_sum: float, mu: float, d0: float) -> float:
    """Bound on ||y_k - x0|| for mu > 0."""
    if mu <= 0 or a_sum <= 0:
        raise ConfigError("distance bound on y needs mu > 0 and a positive A")
    return 2.0 * (1.0 + 2.0 / (a_sum * mu)) * d0


def pair_norm_bounds(a_sum: float, tau: float, dist_y_x0: float):
    """Bounds (on ||v||, on eta) in terms of the distance ||y - x0||."""
    if a_sum <= 0:
        raise ConfigError("pair bounds need a positive coefficient sum")
    v_bound = (1.0 + math.sqrt(tau)) * dist_y_x0 / a_sum
    eta_bound = dist_y_x0**2 / (2.0 * a_sum)
    return v_bound, eta_bound


def pair_absolute_bounds(a_sum: float, mu: float, d0: float):
    """d0-only bounds (on ||v||, on eta) for mu > 0."""
    if mu <= 0 or a_sum <= 0:
        raise ConfigError("absolute pair bounds need mu > 0 and a positive A")
    inflate = 1.0 + 2.0 / (a_sum * mu)
    v_bound = (2.0 / a_sum) * (2.0 + math.sqrt(mu * a_sum)) * inflate * d0
    eta_bound = (2.0 / a_sum) * inflate**2 * d0**2
    return v_bound, eta_bound
