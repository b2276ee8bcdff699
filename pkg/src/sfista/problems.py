"""Composite convex problems phi = f + h.

`f` is a differentiable convex function known through value/gradient callbacks
together with two constants: a strong-convexity modulus and an upper curvature
bound (a Lipschitz constant of the gradient).  `h` is a proximable convex
function whose value may be +inf outside its effective domain.  The module
also ships a small catalog of closed-form proximal maps, seeded benchmark
instance generators, and a plain proximal-gradient reference solver used as
the ground-truth oracle for optimal values.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NumericFailure

Array = np.ndarray

# Multiplicative inflation applied to every computed curvature bound so that
# the estimate certifiably dominates the true constant (the power iteration
# below stops on a residual that certifies a smaller relative error).
CURVATURE_INFLATION = 1.0 + 1e-9
POWER_TOL = 1e-10
POWER_MAX_ITER = 10**5
REFERENCE_TOL = 1e-14
REFERENCE_MAX_ITER = 10**6

RNG_NAME = "pcg64"

INSTANCE_KINDS = ("lasso", "elastic_net", "box_qp", "logistic_l2")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SmoothOracle:
    """Differentiable piece of the objective.

    Attributes:
        value: x -> f(x).
        grad: x -> gradient of f at x.
        mu: strong-convexity modulus of f (0 when merely convex).
        curvature: constant L such that f(x) <= f(z) + <f'(z), x - z>
            + (L/2) * ||x - z||^2 for all x, z.  Must satisfy curvature >= mu.
    """

    value: Callable[[Array], float]
    grad: Callable[[Array], Array]
    mu: float = 0.0
    curvature: float = 0.0


@dataclass(frozen=True)
class ProxOracle:
    """Proximable piece of the objective.

    `value` returns an extended real (+inf outside the domain).  `prox(x, t)`
    returns argmin_u { h(u) + ||u - x||^2 / (2 t) } exactly.
    """

    value: Callable[[Array], float]
    prox: Callable[[Array, float], Array]
    mu: float = 0.0


@dataclass(frozen=True)
class LinearizationRequest:
    """Query for the linearization of f at a base point."""

    z: Array  # base point
    x: Array  # query point


@dataclass(frozen=True)
class ReferenceOptimum:
    phi_star: float
    x_star: Array


@dataclass(frozen=True)
class InstanceSpec:
    """Generation recipe for a seeded benchmark instance."""

    kind: str
    seed: int
    m: int
    n: int
    params: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass(frozen=True)
class CompositeProblem:
    f: SmoothOracle
    h: ProxOracle
    dimension: int
    reference_optimum: Optional[ReferenceOptimum] = None
    spec: Optional[InstanceSpec] = None


def eval_phi(problem: CompositeProblem, x: Array) -> float:
    """Evaluate phi(x) = f(x) + h(x) as an extended real."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dimension,):
        raise ValueError(
            f"point has shape {x.shape}, expected ({problem.dimension},)"
        )
    hx = problem.h.value(x)
    if math.isinf(hx):
        return math.inf
    return float(problem.f.value(x)) + float(hx)


def linearize_f(problem: CompositeProblem, req: LinearizationRequest) -> float:
    """Linearization of f at the request's base point, at its query point."""
    x = np.asarray(req.x, dtype=float)
    z = np.asarray(req.z, dtype=float)
    if x.shape != z.shape or x.shape != (problem.dimension,):
        raise ValueError("query and base point must both match the problem dimension")
    return float(problem.f.value(z)) + float(problem.f.grad(z) @ (x - z))


# ---------------------------------------------------------------------------
# Proximal operator catalog
# ---------------------------------------------------------------------------

def prox_soft_threshold(x: Array, weight: float, step: float) -> Array:
    """Prox of weight * ||.||_1 with step t: componentwise soft threshold."""
    x = np.asarray(x, dtype=float)
    if weight < 0 or step <= 0:
        raise ValueError("soft threshold needs weight >= 0 and step > 0")
    return np.sign(x) * np.maximum(np.abs(x) - weight * step, 0.0)


def prox_box(x: Array, lo, hi) -> Array:
    """Projection onto the box [lo, hi] (step-independent)."""
    x = np.asarray(x, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("box is empty: lo > hi on some component")
    return np.clip(x, lo, hi)


def prox_scaled_quadratic(x: Array, alpha: float, step: float) -> Array:
    """Prox of (alpha/2) * ||.||^2: a pure shrink x / (1 + alpha * step)."""
    x = np.asarray(x, dtype=float)
    if alpha < 0 or step <= 0:
        raise ValueError("scaled quadratic needs alpha >= 0 and step > 0")
    return x / (1.0 + alpha * step)


def l1_norm(weight: float) -> ProxOracle:
    """h(x) = weight * ||x||_1."""
    if weight < 0:
        raise ValueError("l1 weight must be nonnegative")
    return ProxOracle(
        value=lambda x: weight * float(np.abs(x).sum()),
        prox=lambda x, t: prox_soft_threshold(x, weight, t),
        mu=0.0,
    )


def box_indicator(lo, hi) -> ProxOracle:
    """h = indicator of the box [lo, hi]; prox is the projection."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("box is empty: lo > hi on some component")

    def value(x):
        inside = np.all(x >= lo - 0.0) and np.all(x <= hi + 0.0)
        return 0.0 if inside else math.inf

    return ProxOracle(value=value, prox=lambda x, t: np.clip(x, lo, hi), mu=0.0)


def zero_function() -> ProxOracle:
    """h = 0; prox is the identity."""
    return ProxOracle(
        value=lambda x: 0.0,
        prox=lambda x, t: np.asarray(x, dtype=float).copy(),
        mu=0.0,
    )


def scaled_quadratic(alpha: float) -> ProxOracle:
    """h(x) = (alpha/2) * ||x||^2, an alpha-strongly-convex proximable piece."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return ProxOracle(
        value=lambda x: 0.5 * alpha * float(x @ x),
        prox=lambda x, t: prox_scaled_quadratic(x, alpha, t),
        mu=alpha,
    )


# ---------------------------------------------------------------------------
# Smooth oracles
# ---------------------------------------------------------------------------

def least_squares(A: Array, b: Array, ridge: float = 0.0,
                  curvature: Optional[float] = None) -> SmoothOracle:
    """f(x) = 0.5 * ||A x - b||^2 + (ridge/2) * ||x||^2.

    When `curvature` is omitted it is computed by power iteration on A^T A
    and inflated so the bound certifiably dominates the top eigenvalue.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    if curvature is None:
        top = power_iteration(gram_matvec(A), A.shape[1])
        curvature = (top + ridge) * CURVATURE_INFLATION

    def value(x):
        r = A @ x - b
        out = 0.5 * float(r @ r)
        if ridge:
            out += 0.5 * ridge * float(x @ x)
        return out

    def grad(x):
        g = A.T @ (A @ x - b)
        if ridge:
            g = g + ridge * x
        return g

    return SmoothOracle(value=value, grad=grad, mu=ridge, curvature=float(curvature))


def quadratic(Q: Array, c: Array, mu: float = 0.0,
              curvature: Optional[float] = None) -> SmoothOracle:
    """f(x) = 0.5 * x^T Q x - c^T x for symmetric positive semidefinite Q."""
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    if curvature is None:
        curvature = power_iteration(Q, Q.shape[0]) * CURVATURE_INFLATION
    return SmoothOracle(
        value=lambda x: 0.5 * float(x @ (Q @ x)) - float(c @ x),
        grad=lambda x: Q @ x - c,
        mu=float(mu),
        curvature=float(curvature),
    )


def logistic_loss(A: Array, labels: Array, ridge: float = 0.0,
                  curvature: Optional[float] = None) -> SmoothOracle:
    """Mean logistic loss over rows of A with +/-1 labels, plus a ridge term.

    The Hessian is dominated by A^T A / (4 m) + ridge * I, which supplies the
    curvature bound; the ridge supplies the strong-convexity modulus.
    """
    A = np.asarray(A, dtype=float)
    labels = np.asarray(labels, dtype=float)
    m = A.shape[0]
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    if curvature is None:
        top = power_iteration(gram_matvec(A), A.shape[1])
        curvature = (top / (4.0 * m) + ridge) * CURVATURE_INFLATION

    def value(x):
        margins = labels * (A @ x)
        out = float(np.logaddexp(0.0, -margins).mean())
        if ridge:
            out += 0.5 * ridge * float(x @ x)
        return out

    def grad(x):
        margins = labels * (A @ x)
        # sigmoid(-margins), computed without overflow for large |margins|
        w = 0.5 * (1.0 - np.tanh(0.5 * margins))
        g = -(A.T @ (labels * w)) / m
        if ridge:
            g = g + ridge * x
        return g

    return SmoothOracle(value=value, grad=grad, mu=ridge, curvature=float(curvature))


# ---------------------------------------------------------------------------
# Curvature estimation
# ---------------------------------------------------------------------------

def gram_matvec(A: Array) -> Callable[[Array], Array]:
    """Matvec of A^T A without forming the Gram matrix."""
    return lambda v: A.T @ (A @ v)


def power_iteration(op, dim: int, tol: float = POWER_TOL,
                    max_iter: int = POWER_MAX_ITER,
                    rng: Optional[np.random.Generator] = None) -> float:
    """Largest eigenvalue of a symmetric PSD operator by power iteration.

    `op` is either a square array or a matvec callable.  Iterates until the
    eigenpair residual ||M v - theta v|| drops below tol * theta, which for a
    symmetric operator certifies |lambda_max - theta| <= tol * theta.  Raises
    NumericFailure when the cap is hit first.
    """
    matvec = op if callable(op) else (lambda v: op @ v)
    if rng is None:
        rng = _rng(0)
    v = rng.standard_normal(dim)
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        v = np.ones(dim)
        nv = math.sqrt(dim)
    v = v / nv
    for _ in range(max_iter):
        w = matvec(v)
        theta = float(v @ w)
        resid = float(np.linalg.norm(w - theta * v))
        if resid <= tol * max(theta, 1e-300):
            return max(theta, 0.0)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
    raise NumericFailure(
        f"power iteration did not reach residual {tol:g} within {max_iter} iterations"
    )


# ---------------------------------------------------------------------------
# Reference solver
# ---------------------------------------------------------------------------

def reference_solve(problem: CompositeProblem, x0: Optional[Array] = None,
                    tol: float = REFERENCE_TOL,
                    max_iter: int = REFERENCE_MAX_ITER):
    """High-accuracy minimizer of phi by plain proximal gradient.

    Runs x <- prox_h(x - grad f(x) / L, 1/L) with L the curvature bound of f
    until the fixed-point residual ||x - prox_h(x - grad f(x)/L, 1/L)|| falls
    below `tol`.  Returns (phi_star, x_star, d0) where d0 = ||x0 - x_star||.

    This routine is deliberately independent of the accelerated solver: it is
    the oracle the rest of the toolkit is checked against.
    """
    L = problem.f.curvature
    if L <= 0:
        raise ConfigError("reference solve needs a positive curvature bound")
    t = 1.0 / L
    n = problem.dimension
    start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    if start.shape != (n,):
        raise ValueError(f"x0 has shape {start.shape}, expected ({n},)")
    x = start
    for _ in range(max_iter):
        x_next = problem.h.prox(x - t * problem.f.grad(x), t)
        if float(np.linalg.norm(x - x_next)) <= tol:
            x = x_next
            break
        x = x_next
    else:
        raise NumericFailure(
            f"proximal gradient did not reach residual {tol:g} "
            f"within {max_iter} iterations"
        )
    phi_star = eval_phi(problem, x)
    d0 = float(np.linalg.norm(start - x))
    return phi_star, x, d0


# ---------------------------------------------------------------------------
# Seeded benchmark instances
# ---------------------------------------------------------------------------

def make_instance(kind: str, seed: int, m: int, n: int,
                  with_reference: bool = True, **params) -> CompositeProblem:
    """Deterministic benchmark instance of the given kind.

    All randomness is drawn from a PCG64 stream seeded with `seed`, so
    repeated calls produce identical data.  The returned problem carries its
    generation recipe in `spec` and, unless `with_reference=False`, its
    optimal value in `reference_optimum`.

    Kinds and their parameters:
        lasso: reg (0.1), density (0.1), noise (0.1), normalize (False)
        elastic_net: reg (0.1), ridge (1.0), density (0.1), noise (0.1)
        box_qp: ridge (1.0), lo (0.0), hi (1.0), diag (False)
        logistic_l2: ridge (1.0)
    """
    if kind not in INSTANCE_KINDS:
        raise ValueError(f"unknown instance kind {kind!r}; expected one of {INSTANCE_KINDS}")
    if m <= 0 or n <= 0:
        raise ValueError("instance shape must be positive")
    builder = {
        "lasso": _make_lasso,
        "elastic_net": _make_elastic_net,
        "box_qp": _make_box_qp,
        "logistic_l2": _make_logistic_l2,
    }[kind]
    problem, used_params, data = builder(seed, m, n, dict(params))
    spec = InstanceSpec(kind=kind, seed=seed, m=m, n=n, params=used_params, data=data)
    problem = dataclasses.replace(problem, spec=spec)
    if with_reference:
        phi_star, x_star, _ = reference_solve(problem)
        problem = dataclasses.replace(
            problem, reference_optimum=ReferenceOptimum(phi_star, x_star)
        )
    return problem


def _pop_params(params: dict, defaults: dict) -> dict:
    out = dict(defaults)
    for key in list(params):
        if key not in defaults:
            raise ValueError(f"unknown instance parameter {key!r}")
        out[key] = params.pop(key)
    return out


def _sparse_regression_data(rng, m, n, density, noise):
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    support = rng.random(n) < density
    x_true[support] = rng.standard_normal(int(support.sum()))
    b = A @ x_true + noise * rng.standard_normal(m)
    return A, b

def _make_lasso(seed, m, n, params):
    p = _pop_params(params, {"reg": 0.1, "density": 0.1, "noise": 0.1,
                             "normalize": False})
    rng = _rng(seed)
    A, b = _sparse_regression_data(rng, m, n, p["density"], p["noise"])
    if p["normalize"]:
        top = power_iteration(gram_matvec(A), n, rng=rng)
        A = A / math.sqrt(top)
    top = power_iteration(gram_matvec(A), n, rng=rng)
    f = least_squares(A, b, curvature=top * CURVATURE_INFLATION)
    h = l1_norm(p["reg"])
    problem = CompositeProblem(f=f, h=h, dimension=n)
    return problem, p, {"A": A, "b": b}


def _make_elastic_net(seed, m, n, params):
    p = _pop_params(params, {"reg": 0.1, "ridge": 1.0, "density": 0.1,
                             "noise": 0.1})
    if p["ridge"] < 0:
        raise ValueError("ridge must be nonnegative")
    rng = _rng(seed)
    A, b = _sparse_regression_data(rng, m, n, p["density"], p["noise"])
    top = power_iteration(gram_matvec(A), n, rng=rng)
    f = least_squares(A, b, ridge=p["ridge"],
                      curvature=(top + p["ridge"]) * CURVATURE_INFLATION)
    h = l1_norm(p["reg"])
    problem = CompositeProblem(f=f, h=h, dimension=n)
    return problem, p, {"A": A, "b": b}


def _make_box_qp(seed, m, n, params):
    p = _pop_params(params, {"ridge": 1.0, "lo": 0.0, "hi": 1.0, "diag": False})
    if p["lo"] > p["hi"]:
        raise ValueError("box is empty: lo > hi")
    rng = _rng(seed)
    if p["diag"]:
        Q = np.diag(np.arange(1.0, n + 1.0))
        mu = 1.0
    else:
        B = rng.standard_normal((m, n))
        Q = B.T @ B / m + p["ridge"] * np.eye(n)
        mu = p["ridge"]
    c = rng.standard_normal(n)
    top = power_iteration(Q, n, rng=rng)
    f = quadratic(Q, c, mu=mu, curvature=top * CURVATURE_INFLATION)
    h = box_indicator(np.full(n, float(p["lo"])), np.full(n, float(p["hi"])))
    problem = CompositeProblem(f=f, h=h, dimension=n)
    return problem, p, {"Q": Q, "c": c}


def _make_logistic_l2(seed, m, n, params):
    p = _pop_params(params, {"ridge": 1.0})
    if p["ridge"] < 0:
        raise ValueError("ridge must be nonnegative")
    rng = _rng(seed)
    A = rng.standard_normal((m, n))
    w_true = rng.standard_normal(n) / math.sqrt(n)
    margins = A @ w_true + 0.1 * rng.standard_normal(m)
    labels = np.where(margins >= 0, 1.0, -1.0)
    top = power_iteration(gram_matvec(A), n, rng=rng)
    f = logistic_loss(A, labels, ridge=p["ridge"],
                      curvature=(top / (4.0 * m) + p["ridge"]) * CURVATURE_INFLATION)
    h = zero_function()
    problem = CompositeProblem(f=f, h=h, dimension=n)
    return problem, p, {"A": A, "labels": labels}


# ---------------------------------------------------------------------------
# Instance spec files
# ---------------------------------------------------------------------------

def format_real(v: float) -> str:
    """Decimal form with 17 significant digits (lossless float round trip)."""
    return f"{float(v):.17g}"


def save_instance(path, problem: CompositeProblem) -> None:
    """Write the generation recipe and computed constants as key = value lines."""
    if problem.spec is None:
        raise ValueError("problem carries no generation recipe to save")
    spec = problem.spec
    lines = [
        f"kind = {spec.kind}",
        f"seed = {spec.seed}",
        f"m = {spec.m}",
        f"n = {spec.n}",
        f"rng = {RNG_NAME}",
    ]
    for key in sorted(spec.params):
        lines.append(f"{key} = {_format_param(spec.params[key])}")
    lines.append(f"lf_bar = {format_real(problem.f.curvature)}")
    lines.append(f"mu_f_bar = {format_real(problem.f.mu)}")
    lines.append(f"mu_h_bar = {format_real(problem.h.mu)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _format_param(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_real(v)
    return str(v)


def _parse_value(text: str):
    text = text.strip()
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_instance(path) -> CompositeProblem:
    """Regenerate an instance from a spec file, checking the recorded constants."""
    entries: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed instance line: {raw!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = _parse_value(value)
    for required in ("kind", "seed", "m", "n"):
        if required not in entries:
            raise ValueError(f"instance file misses required key {required!r}")
    recorded = {
        "lf_bar": entries.pop("lf_bar", None),
        "mu_f_bar": entries.pop("mu_f_bar", None),
        "mu_h_bar": entries.pop("mu_h_bar", None),
    }
    entries.pop("rng", None)
    kind = entries.pop("kind")
    seed = entries.pop("seed")
    m = entries.pop("m")
    n = entries.pop("n")
    problem = make_instance(kind, seed, m, n, **entries)
    checks = (
        (recorded["lf_bar"], problem.f.curvature),
        (recorded["mu_f_bar"], problem.f.mu),
        (recorded["mu_h_bar"], problem.h.mu),
    )
    for want, got in checks:
        if want is None:
            continue
        if abs(got - want) > 1e-9 * max(1.0, abs(want)):
            raise NumericFailure(
                f"regenerated constant {got!r} does not match recorded {want!r}"
            )
    return problem
