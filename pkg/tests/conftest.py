"""Shared fixtures and frozen reference constants for the test suite.

The numeric constants below are for the reference matrix [[3, 1], [1, 1]]
and were derived symbolically (characteristic polynomial x^2 - 4x + 2,
eigenvalues 2 +/- sqrt(2)) with an independent computer-algebra run, then
frozen as decimal literals.  Tests compare against these literals, never
against values computed by the package itself.
"""

import numpy as np
import pytest

from anosovlab import ShearMap, SmoothEndo, analyze

# eigenvalues 2 + sqrt(2) and 2 - sqrt(2)
MU_U = 3.414213562373095048802
MU_S = 0.5857864376269049511983
# log(2 + sqrt(2)), log(2 - sqrt(2)), log(det) = log 2
LAMBDA_U = 1.227947177299515679941
LAMBDA_S = -0.5347999967395703705240
LOG_DET = 0.6931471805599453094172
# mu_s / mu_u = 3 - 2 sqrt(2): projective contraction ratio of A
DECAY_RATIO = 0.1715728752538099023966
# unit eigenvectors, first component positive
E_U = np.array([0.9238795325112867561282, 0.3826834323650897717285])
E_S = np.array([0.3826834323650897717285, -0.9238795325112867561282])


@pytest.fixture(scope="session")
def A():
    return analyze([[3, 1], [1, 1]])


@pytest.fixture(scope="session")
def f_lin(A):
    return SmoothEndo(A, [])


@pytest.fixture(scope="session")
def f_small(A):
    return SmoothEndo(A, [ShearMap(0, 1, 0.02)])


@pytest.fixture(scope="session")
def f_mid(A):
    return SmoothEndo(A, [ShearMap(0, 1, 0.05)])


@pytest.fixture(scope="session")
def f_big(A):
    return SmoothEndo(A, [ShearMap(0, 1, 0.10)])


@pytest.fixture(scope="session")
def leaf_warmup(f_lin):
    """Compile the leaf-tracing kernels once, outside any timed region."""
    from anosovlab import trace_leaf

    trace_leaf(f_lin, np.array([0.25, 0.25]), arclength=0.05, step=0.01, depth=5)
    return True
