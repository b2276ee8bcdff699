"""Shared fixtures: seeded instances and recorded solver runs.

The expensive pieces (reference solves, long captures) are session scoped so
the acceptance checks and the unit tests interrogate the same runs.
"""

import numpy as np
import pytest

from sfista import engine, harness, problems


@pytest.fixture(scope="session")
def lasso42():
    return problems.make_instance("lasso", 42, 100, 200, reg=0.1)


@pytest.fixture(scope="session")
def lasso42_capture(lasso42):
    config = engine.SolverConfig.for_problem(lasso42)
    x0 = np.zeros(lasso42.dimension)
    return harness.capture_run(lasso42, config, x0, 2000)


@pytest.fixture(scope="session")
def elastic_mu1():
    # ridge 1.0 makes f 1-strongly convex, so the solver runs with mu = 1
    return problems.make_instance("elastic_net", 7, 30, 50, reg=0.05, ridge=1.0)


@pytest.fixture(scope="session")
def elastic_capture(elastic_mu1):
    config = engine.SolverConfig.for_problem(elastic_mu1)
    x0 = np.zeros(elastic_mu1.dimension)
    return harness.capture_run(elastic_mu1, config, x0, 800)


@pytest.fixture(scope="session")
def lasso_small():
    return problems.make_instance("lasso", 3, 30, 50)


@pytest.fixture(scope="session")
def lasso_norm():
    # unit-curvature design, so lf = 1.25 * (1 + 1e-9)
    return problems.make_instance("lasso", 11, 40, 60, normalize=True,
                                  with_reference=False)


@pytest.fixture(scope="session")
def quad1d():
    """f(x) = x^2 / 2, h = 0, minimizer 0; curvature bound exactly 1."""
    f = problems.quadratic(np.array([[1.0]]), np.zeros(1), mu=1.0, curvature=1.0)
    return problems.CompositeProblem(
        f=f, h=problems.zero_function(), dimension=1,
        reference_optimum=problems.ReferenceOptimum(0.0, np.zeros(1)),
    )
