"""
Shared fixtures: small coefficient families and bases that keep every
test fast while exercising the real code paths.
"""

import numpy as np
import pytest

from quadtest.core import extremal
from quadtest.models.basis_spec import BasisKind, BasisSpec
from quadtest.models.coefficients import FiniteList, SobolevDerivative, TwoSampleNorm
from quadtest.models.testing import TestConfig


@pytest.fixture
def tensor1():
    return BasisSpec(BasisKind.TENSOR, 1)


@pytest.fixture
def two_sample_basis():
    return BasisSpec(BasisKind.TENSOR, 1, samples=2)


@pytest.fixture
def toy_list():
    """Nonnegative list with c = l^2 and q = 1."""
    return FiniteList([[1], [2], [3], [4]], c=[1.0, 2.0, 4.0, 8.0], q=[1.0, 1.0, 1.0, 1.0])


@pytest.fixture
def signed_toy():
    """The symmetric two-index family with c = 2 and q = +1, -1."""
    return FiniteList([[1], [2]], c=[2.0, 2.0], q=[1.0, -1.0])


@pytest.fixture
def rough_spec():
    """Sobolev ellipsoid just above the embedding threshold, tunable at n = 1000."""
    return SobolevDerivative([0.26], [0.0])


@pytest.fixture
def smooth_spec():
    return SobolevDerivative([2.0], [0.0])


@pytest.fixture
def two_sample_spec():
    return TwoSampleNorm([2.0], [0.0])


@pytest.fixture
def rough_solution(rough_spec):
    return extremal.separation_rate(rough_spec, 1000, 0.1)


@pytest.fixture
def rough_config(rough_spec, tensor1):
    return TestConfig(rough_spec, tensor1, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
