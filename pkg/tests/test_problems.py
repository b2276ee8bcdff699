"""Oracles, prox catalog, instance generation, and the reference solver."""

import math

import numpy as np
import pytest

from sfista import problems
from sfista.errors import NumericFailure
from sfista.problems import (CompositeProblem, LinearizationRequest, eval_phi,
                             linearize_f, make_instance, power_iteration,
                             prox_box, prox_scaled_quadratic,
                             prox_soft_threshold, quadratic, reference_solve)


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# prox catalog
# ---------------------------------------------------------------------------

def test_soft_threshold_values():
    assert prox_soft_threshold(np.array([2.0]), 1.0, 1.0)[0] == 1.0
    assert prox_soft_threshold(np.array([-0.5]), 1.0, 1.0)[0] == 0.0
    # |0.3| - 0.7 * 0.2 = 0.16
    np.testing.assert_allclose(
        prox_soft_threshold(np.array([0.3]), 0.7, 0.2), [0.16], rtol=1e-15)


def test_soft_threshold_rejects_bad_args():
    with pytest.raises(ValueError):
        prox_soft_threshold(np.array([1.0]), -0.1, 1.0)
    with pytest.raises(ValueError):
        prox_soft_threshold(np.array([1.0]), 1.0, 0.0)


def test_box_projection_values():
    inside = np.array([0.25, 0.5])
    np.testing.assert_array_equal(prox_box(inside, 0.0, 1.0), inside)
    np.testing.assert_array_equal(
        prox_box(np.array([2.0, -3.0]), np.zeros(2), np.ones(2)), [1.0, 0.0])
    with pytest.raises(ValueError):
        prox_box(np.zeros(2), np.array([0.0, 2.0]), np.array([1.0, 1.0]))


def test_box_projection_is_nearest_point():
    rng = _rng(0)
    lo, hi = -np.ones(5), np.ones(5)
    for _ in range(100):
        x = 3.0 * rng.standard_normal(5)
        p = prox_box(x, lo, hi)
        for _ in range(10):
            u = rng.uniform(-1.0, 1.0, size=5)
            assert np.linalg.norm(p - x) <= np.linalg.norm(u - x) + 1e-12


def test_scaled_quadratic_prox():
    x = np.array([2.0])
    np.testing.assert_array_equal(prox_scaled_quadratic(x, 0.0, 1.0), x)
    assert prox_scaled_quadratic(x, 1.0, 1.0)[0] == 1.0
    assert abs(prox_scaled_quadratic(x, 1e12, 1.0)[0]) <= 1e-6


def test_prox_optimality_inequality():
    # h(p) + ||p - x||^2 / (2t) <= h(u) + ||u - x||^2 / (2t) for sampled u
    rng = _rng(1)
    n = 6
    oracles = [
        problems.l1_norm(0.3),
        problems.scaled_quadratic(2.0),
        problems.zero_function(),
        problems.box_indicator(-np.ones(n), np.ones(n)),
    ]
    for h in oracles:
        for _ in range(25):
            x = 2.0 * rng.standard_normal(n)
            t = float(rng.uniform(0.1, 2.0))
            p = h.prox(x, t)
            best = h.value(p) + float((p - x) @ (p - x)) / (2.0 * t)
            for _ in range(40):
                u = rng.uniform(-1.0, 1.0, size=n)
                trial = h.value(u) + float((u - x) @ (u - x)) / (2.0 * t)
                assert best <= trial + 1e-9 * (1.0 + abs(trial))


# ---------------------------------------------------------------------------
# objective evaluation and linearization
# ---------------------------------------------------------------------------

def test_eval_phi_lasso_at_zero(lasso42):
    b = lasso42.spec.data["b"]
    expected = 0.5 * float(b @ b)
    got = eval_phi(lasso42, np.zeros(lasso42.dimension))
    np.testing.assert_allclose(got, expected, rtol=1e-13)


def test_eval_phi_outside_box_is_inf():
    problem = make_instance("box_qp", 0, 5, 5, diag=True, with_reference=False)
    x = np.full(5, 2.0)
    assert math.isinf(eval_phi(problem, x))


def test_eval_phi_rejects_wrong_shape(quad1d):
    with pytest.raises(ValueError):
        eval_phi(quad1d, np.zeros(3))


def test_linearize_f_quadratic(quad1d):
    # f(z) + <f'(z), x - z> at z=1, x=0 for f = x^2/2
    req = LinearizationRequest(z=np.ones(1), x=np.zeros(1))
    assert linearize_f(quad1d, req) == -0.5
    same = LinearizationRequest(z=np.ones(1), x=np.ones(1))
    assert linearize_f(quad1d, same) == 0.5


def test_linearize_f_identity_quadratic():
    f = quadratic(np.eye(50), np.zeros(50), curvature=1.0)
    problem = CompositeProblem(f=f, h=problems.zero_function(), dimension=50)
    req = LinearizationRequest(z=np.ones(50), x=np.zeros(50))
    assert linearize_f(problem, req) == -25.0
    with pytest.raises(ValueError):
        linearize_f(problem, LinearizationRequest(z=np.ones(50), x=np.zeros(3)))


@pytest.mark.parametrize("kind,kwargs", [
    ("lasso", dict(reg=0.1)),
    ("elastic_net", dict(ridge=1.0)),
    ("logistic_l2", dict(ridge=0.5)),
])
def test_smoothness_envelope(kind, kwargs):
    # l_f(x; z) + (mu/2)||x-z||^2 <= f(x) <= l_f(x; z) + (L/2)||x-z||^2
    problem = make_instance(kind, 5, 25, 40, with_reference=False, **kwargs)
    n = problem.dimension
    mu_bar = problem.f.mu
    lf_bar = problem.f.curvature
    rng = _rng(2)
    worst_lower = -math.inf
    worst_upper = -math.inf
    for _ in range(1000):
        x = rng.standard_normal(n)
        z = rng.standard_normal(n)
        lin = linearize_f(problem, LinearizationRequest(z=z, x=x))
        fx = problem.f.value(x)
        d2 = float((x - z) @ (x - z))
        worst_lower = max(worst_lower, lin + 0.5 * mu_bar * d2 - fx)
        worst_upper = max(worst_upper, fx - lin - 0.5 * lf_bar * d2)
    assert worst_lower <= 1e-9
    assert worst_upper <= 1e-9


def test_nu_convexity_at_reference(elastic_mu1):
    problem = elastic_mu1
    nu = problem.f.mu + problem.h.mu
    assert nu == 1.0
    ref = problem.reference_optimum
    phi_star = eval_phi(problem, ref.x_star)
    rng = _rng(3)
    for _ in range(200):
        x = ref.x_star + rng.standard_normal(problem.dimension)
        phi_x = eval_phi(problem, x)
        lower = phi_star + 0.5 * nu * float((x - ref.x_star) @ (x - ref.x_star))
        assert lower <= phi_x + 1e-9 * (1.0 + abs(phi_x))


# ---------------------------------------------------------------------------
# instance generation
# ---------------------------------------------------------------------------

def test_make_instance_is_deterministic():
    a = make_instance("lasso", 42, 20, 30, with_reference=False)
    b = make_instance("lasso", 42, 20, 30, with_reference=False)
    np.testing.assert_array_equal(a.spec.data["A"], b.spec.data["A"])
    np.testing.assert_array_equal(a.spec.data["b"], b.spec.data["b"])
    assert a.f.curvature == b.f.curvature


def test_elastic_net_modulus_is_ridge():
    problem = make_instance("elastic_net", 1, 10, 15, ridge=2.5,
                            with_reference=False)
    assert problem.f.mu == 2.5


def test_box_qp_diag_curvature():
    n = 30
    problem = make_instance("box_qp", 7, n, n, diag=True, with_reference=False)
    assert problem.f.mu == 1.0
    # known spectrum 1..n, inflated by 1 + 1e-9
    assert abs(problem.f.curvature - n * (1.0 + 1e-9)) <= 1e-9 * n


def test_logistic_modulus_and_kind_errors():
    problem = make_instance("logistic_l2", 2, 12, 8, ridge=0.7,
                            with_reference=False)
    assert problem.f.mu == 0.7
    with pytest.raises(ValueError):
        make_instance("svm", 0, 5, 5)
    with pytest.raises(ValueError):
        make_instance("lasso", 0, 0, 5)
    with pytest.raises(ValueError):
        make_instance("lasso", 0, 5, 5, bogus=1.0)


def test_power_iteration_matches_dense_spectrum():
    diag = np.diag(np.arange(1.0, 9.0))
    assert abs(power_iteration(diag, 8) - 8.0) <= 1e-8
    rng = _rng(4)
    B = rng.standard_normal((12, 9))
    M = B.T @ B
    top = float(np.linalg.eigvalsh(M)[-1])
    assert abs(power_iteration(M, 9) - top) <= 1e-8 * top
    # matvec form agrees with the dense form
    assert abs(power_iteration(lambda v: M @ v, 9) - top) <= 1e-8 * top


def test_power_iteration_edge_cases():
    assert power_iteration(np.zeros((4, 4)), 4) == 0.0
    with pytest.raises(NumericFailure):
        power_iteration(np.diag([1.0, 2.0]), 2, max_iter=0)


# ---------------------------------------------------------------------------
# reference solver
# ---------------------------------------------------------------------------

def test_reference_matches_normal_equations():
    rng = _rng(5)
    B = rng.standard_normal((20, 8))
    Q = B.T @ B / 20.0 + np.eye(8)
    c = rng.standard_normal(8)
    f = quadratic(Q, c, mu=1.0)
    problem = CompositeProblem(f=f, h=problems.zero_function(), dimension=8)
    phi_star, x_star, d0 = reference_solve(problem)
    direct = np.linalg.solve(Q, c)
    assert float(np.linalg.norm(x_star - direct)) <= 1e-10 * (1 + np.linalg.norm(direct))
    direct_value = 0.5 * float(direct @ (Q @ direct)) - float(c @ direct)
    assert abs(phi_star - direct_value) <= 1e-10 * (1.0 + abs(direct_value))
    assert d0 == float(np.linalg.norm(x_star))


def test_reference_unique_under_strong_convexity(elastic_mu1):
    _, from_zero, _ = reference_solve(elastic_mu1)
    rng = _rng(6)
    _, from_random, _ = reference_solve(elastic_mu1,
                                        x0=rng.standard_normal(elastic_mu1.dimension))
    assert float(np.linalg.norm(from_zero - from_random)) <= 1e-10


def test_reference_from_optimum_has_zero_distance(elastic_mu1):
    x_star = elastic_mu1.reference_optimum.x_star
    _, _, d0 = reference_solve(elastic_mu1, x0=x_star)
    assert d0 <= 1e-12


def test_reference_iteration_cap():
    problem = make_instance("lasso", 9, 10, 20, with_reference=False)
    with pytest.raises(NumericFailure):
        reference_solve(problem, max_iter=0)


# ---------------------------------------------------------------------------
# instance spec files
# ---------------------------------------------------------------------------

def test_instance_file_round_trip(tmp_path):
    problem = make_instance("elastic_net", 5, 15, 20, ridge=2.0,
                            with_reference=False)
    path = tmp_path / "instance.txt"
    problems.save_instance(path, problem)
    text = path.read_text()
    assert "kind = elastic_net" in text
    assert "rng = pcg64" in text
    loaded = problems.load_instance(path)
    assert loaded.f.curvature == problem.f.curvature
    assert loaded.f.mu == 2.0
    np.testing.assert_array_equal(loaded.spec.data["A"], problem.spec.data["A"])


def test_instance_file_detects_constant_mismatch(tmp_path):
    problem = make_instance("lasso", 8, 10, 12, with_reference=False)
    path = tmp_path / "instance.txt"
    problems.save_instance(path, problem)
    lines = path.read_text().splitlines()
    lines = [f"lf_bar = {2 * problem.f.curvature:.17g}"
             if line.startswith("lf_bar") else line for line in lines]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(NumericFailure):
        problems.load_instance(path)


def test_instance_file_requires_keys(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("kind = lasso\nseed = 1\nm = 4\n")
    with pytest.raises(ValueError):
        problems.load_instance(path)
    bare = CompositeProblem(f=quadratic(np.eye(2), np.zeros(2), curvature=1.0),
                            h=problems.zero_function(), dimension=2)
    with pytest.raises(ValueError):
        problems.save_instance(tmp_path / "x.txt", bare)
