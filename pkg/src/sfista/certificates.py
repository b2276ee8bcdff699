"""Optimality certificates carried by the accelerated iterates.

Three objects are computable from a solver state without extra assumptions:

* a stationarity residual `u` that belongs to the composite subdifferential
  at the latest proximal point,
* a residual pair `(v, eta)` with `v` an eta-approximate subgradient of the
  shifted objective phi - (mu/2) ||. - y||^2 at y, and
* an aggregated quadratic lower model of phi, maintained incrementally as one
  scalar, one vector, and a fixed Hessian multiple of the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import CertificateUndefinedError
from .problems import CompositeProblem, eval_phi

if TYPE_CHECKING:  # pragma: no cover
    from .engine import IterateState

Array = np.ndarray


@dataclass(frozen=True)
class StationarityResidual:
    """u in grad f(y) + subdiff h(y) together with its norm."""

    u: Array
    norm: float


@dataclass(frozen=True)
class ResidualPair:
    """v and eta >= 0 with v an eta-subgradient of phi - (mu/2)||. - y||^2 at y."""

    v: Array
    eta: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.v))


@dataclass(frozen=True)
class LowerModel:
    """Quadratic minorant constant + <linear, x> + (curvature/2) ||x||^2.

    `weight` is the accumulated coefficient sum behind the aggregation; a
    weight of zero denotes the empty model before the first step.
    """

    constant: float
    linear: Array
    curvature: float
    weight: float

    def __call__(self, x: Array) -> float:
        x = np.asarray(x, dtype=float)
        out = self.constant + float(self.linear @ x)
        if self.curvature:
            out += 0.5 * self.curvature * float(x @ x)
        return out


@dataclass(frozen=True)
class CertificateBundle:
    stationarity: Optional[StationarityResidual] = None
    pair: Optional[ResidualPair] = None


def zero_model(dim: int, curvature: float) -> LowerModel:
    return LowerModel(constant=0.0, linear=np.zeros(dim), curvature=float(curvature),
                      weight=0.0)


def gamma_coefficients(x_tilde: Array, y_next: Array, grad_at_tilde: Array,
                       f_at_tilde: float, h_at_y_next: float,
                       lam: float, mu: float, mu_f: float):
    """Coefficients (constant, linear) of one step's quadratic minorant.

    The minorant is built from the linearization of f at the extrapolated
    point plus h at the proximal output, re-expanded around the origin so it
    can be aggregated coordinate-free:

        gamma(x) = value_at_y + <(x_tilde - y_next)/lam, x - y_next>
                   + (mu/2) ||x - y_next||^2
    """
    diff = x_tilde - y_next
    value_at_y = (
        float(f_at_tilde)
        + float(grad_at_tilde @ (y_next - x_tilde))
        + float(h_at_y_next)
        + 0.5 * mu_f * float(diff @ diff)
    )
    slope = diff / lam
    linear = slope - mu * y_next
    constant = value_at_y - float(slope @ y_next) + 0.5 * mu * float(y_next @ y_next)
    return constant, linear


def lower_model_update(model: LowerModel, a: float, x_tilde: Array, y_next: Array,
                       grad_at_tilde: Array, f_at_tilde: float, h_at_y_next: float,
                       lam: float, mu: float, mu_f: float) -> LowerModel:
    """Fold one step's minorant into the aggregate with weight `a`."""
    constant, linear = gamma_coefficients(
        x_tilde, y_next, grad_at_tilde, f_at_tilde, h_at_y_next, lam, mu, mu_f
    )
    total = model.weight + a
    if model.weight == 0.0:
        return LowerModel(constant=constant, linear=linear,
                          curvature=model.curvature, weight=total)
    w_old = model.weight / total
    w_new = a / total
    return LowerModel(
        constant=w_old * model.constant + w_new * constant,
        linear=w_old * model.linear + w_new * linear,
        curvature=model.curvature,
        weight=total,
    )


def stationarity_residual(state: "IterateState",
                          problem: CompositeProblem) -> StationarityResidual:
    """Composite subgradient at the current proximal point y.

    Defined for k >= 1 only, because it references the extrapolated point the
    last proximal step was taken from.
    """
    if state.k < 1 or state.x_tilde_prev is None:
        raise CertificateUndefinedError("stationarity residual needs at least one step")
    u = (
        problem.f.grad(state.y)
        - problem.f.grad(state.x_tilde_prev)
        + state.lf * (state.x_tilde_prev - state.y)
    )
    return StationarityResidual(u=u, norm=float(np.linalg.norm(u)))


def residual_pair(state: "IterateState") -> ResidualPair:
    """Approximate-subgradient pair (v, eta) at the current y.

    v = mu (y - x) + (x0 - x) / A and
    eta = (||x0 - y||^2 - tau ||x - y||^2) / (2 A); eta >= 0 up to rounding.
    """
    if state.k < 1:
        raise CertificateUndefinedError("residual pair needs at least one step")
    diff_xy = state.y - state.x
    v = state.mu * diff_xy + (state.x0 - state.x) / state.A
    dist0 = state.x0 - state.y
    eta = (float(dist0 @ dist0) - state.tau * float(diff_xy @ diff_xy)) / (2.0 * state.A)
    return ResidualPair(v=v, eta=eta)


def bundle(state: "IterateState", problem: CompositeProblem,
           stationarity: bool = True, residual: bool = True) -> CertificateBundle:
    """Certificates for the current iterate; each piece is optional."""
    stat = stationarity_residual(state, problem) if stationarity else None
    pair = residual_pair(state) if residual else None
    return CertificateBundle(stationarity=stat, pair=pair)


def sample_points(state: "IterateState", problem: CompositeProblem, count: int,
                  rng: np.random.Generator) -> Array:
    """Gaussian queries around y, scaled by (1 + ||y||), mapped into dom h.

    Points outside the effective domain are replaced by their prox image
    (for an indicator that is exactly the projection).
    """
    scale = 1.0 + float(np.linalg.norm(state.y))
    points = state.y + scale * rng.standard_normal((count, state.y.size))
    for i in range(count):
        if math.isinf(problem.h.value(points[i])):
            points[i] = problem.h.prox(points[i], 1.0)
    return points


def check_eps_subgradient(pair: ResidualPair, state: "IterateState",
                          problem: CompositeProblem, samples: Array) -> float:
    """Worst violation of the eta-subgradient inequality over the samples.

    For each sample x the inequality phi(x) - (mu/2)||x - y||^2 >= phi(y)
    + <v, x - y> - eta must hold; the returned value is the largest amount by
    which it fails (negative when it holds everywhere).  Samples outside
    dom h contribute -inf and are skipped.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    phi_y = eval_phi(problem, state.y)
    worst = -math.inf
    for x in samples:
        phi_x = eval_phi(problem, x)
        if math.isinf(phi_x):
            continue
        diff = x - state.y
        lhs = phi_y + float(pair.v @ diff) - pair.eta
        rhs = phi_x - 0.5 * state.mu * float(diff @ diff)
        worst = max(worst, lhs - rhs)
    return worst


def lower_model_gap(model: LowerModel, problem: CompositeProblem,
                    samples: Array) -> float:
    """Largest amount by which the aggregated model exceeds phi on the samples.

    Nonpositive (up to rounding) because the model is a global minorant.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    worst = -math.inf
    for x in samples:
        phi_x = eval_phi(problem, x)
        if math.isinf(phi_x):
            continue
        worst = max(worst, model(x) - phi_x)
    return worst


def lower_model_violation(model: LowerModel, pair: ResidualPair,
                          state: "IterateState", problem: CompositeProblem,
                          samples: Array) -> float:
    """Worst violation of the model-based subgradient inequality.

    Checks model(x) - (mu/2)||x - y||^2 >= phi(y) + <v, x - y> - eta over the
    samples, the inequality that makes (v, eta) a certificate as soon as the
    model minorizes phi.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    phi_y = eval_phi(problem, state.y)
    worst = -math.inf
    for x in samples:
        diff = x - state.y
        lhs = phi_y + float(pair.v @ diff) - pair.eta
        rhs = model(x) - 0.5 * state.mu * float(diff @ diff)
        worst = max(worst, lhs - rhs)
    return worst
