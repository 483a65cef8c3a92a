import math

import numpy as np
import pytest

from quadtest.core import basis
from quadtest.core.spectra import lattice_box
from quadtest.errors import DomainError
from quadtest.models.basis_spec import BasisKind, BasisSpec
from quadtest.models.spectral import ActiveSet

SQRT2 = math.sqrt(2.0)


def _active(lattice, tags=None):
    lattice = np.asarray(lattice, dtype=np.int64)
    zeros = np.zeros(lattice.shape[0])
    return ActiveSet(1.0, lattice, zeros, zeros, tags)


def test_dot_product_cosine_branch_at_origin():
    spec = BasisSpec(BasisKind.DOT_PRODUCT, 1)
    assert basis.eval_basis(spec, [1], [0.0]) == pytest.approx(SQRT2)


def test_tensor_sine_branch_for_negative_index():
    spec = BasisSpec(BasisKind.TENSOR, 1)
    assert basis.eval_basis(spec, [-1], [0.25]) == pytest.approx(-SQRT2)


def test_tensor_factor_is_one_on_zero_axes():
    spec = BasisSpec(BasisKind.TENSOR, 2)
    value = basis.eval_basis(spec, [0, 1], [0.3, 0.0])
    assert value == pytest.approx(SQRT2)


def test_zero_index_is_rejected():
    spec = BasisSpec(BasisKind.TENSOR, 2)
    with pytest.raises(DomainError):
        basis.eval_basis(spec, [0, 0], [0.1, 0.2])


def test_point_dimension_mismatch_is_rejected():
    spec = BasisSpec(BasisKind.TENSOR, 2)
    with pytest.raises(DomainError):
        basis.eval_basis(spec, [1, 0], [0.1])


@pytest.mark.parametrize("kind", [BasisKind.TENSOR, BasisKind.DOT_PRODUCT])
def test_gram_matrix_is_identity_below_nyquist(kind):
    spec = BasisSpec(kind, 2)
    lattice = lattice_box(np.array([3, 3]))
    gram = basis.gram_check(spec, lattice, grid_size=8)
    np.testing.assert_allclose(gram, np.eye(lattice.shape[0]), atol=1e-12)


def test_two_sample_gram_matrix_is_identity():
    spec = BasisSpec(BasisKind.TENSOR, 1, samples=2)
    lattice = np.array([[1], [1], [2], [-1]])
    tags = np.array([1, 2, 1, 2])
    gram = basis.gram_check(spec, lattice, grid_size=8, tags=tags)
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-12)


def test_two_sample_basis_reads_the_tagged_block():
    spec = BasisSpec(BasisKind.TENSOR, 1, samples=2)
    assert basis.eval_basis(spec, [1], [0.25, 0.0], tag=2) == pytest.approx(SQRT2)
    assert basis.eval_basis(spec, [1], [0.0, 0.25], tag=1) == pytest.approx(SQRT2)


def test_design_matrix_shape_and_values(tensor1, rng):
    points = rng.random((7, 1))
    active = _active([[1], [-2], [3]])
    phi = basis.design_matrix(tensor1, active, points)
    assert phi.shape == (7, 3)
    assert phi[2, 1] == pytest.approx(basis.eval_basis(tensor1, [-2], points[2]))


def test_design_matrix_chunks_agree_with_single_pass(tensor1, rng, monkeypatch):
    points = rng.random((50, 1))
    active = _active([[1], [2], [-3]])
    whole = basis.design_matrix(tensor1, active, points)
    monkeypatch.setattr(basis, "_CHUNK_ENTRIES", 8)
    np.testing.assert_allclose(basis.design_matrix(tensor1, active, points), whole)


def test_sup_sum_of_a_conjugate_pair_is_constant(tensor1):
    # 2 cos^2 + 2 sin^2 = 2 everywhere
    assert basis.sup_sum_squares(tensor1, _active([[-1], [1]])) == pytest.approx(2.0)


def test_sup_sum_respects_the_basis_bound():
    spec = BasisSpec(BasisKind.TENSOR, 2)
    lattice = lattice_box(np.array([2, 2]))
    value = basis.sup_sum_squares(spec, _active(lattice))
    assert value <= spec.c3_bound * lattice.shape[0] + 1e-9


def test_basis_sup_bounds():
    assert basis.basis_sup(BasisSpec(BasisKind.DOT_PRODUCT, 3)) == pytest.approx(SQRT2)
    assert basis.basis_sup(BasisSpec(BasisKind.TENSOR, 3)) == pytest.approx(2.0 ** 1.5)


def test_unit_grid_covers_the_torus():
    grid = basis.unit_grid(2, 4)
    assert grid.shape == (16, 2)
    assert grid.min() == 0.0
    assert grid.max() == pytest.approx(0.75)


def test_dot_product_branches_at_a_quarter():
    spec = BasisSpec(BasisKind.DOT_PRODUCT, 1)
    assert basis.eval_basis(spec, [1], [0.25]) == pytest.approx(0.0, abs=1e-12)
    assert basis.eval_basis(spec, [-1], [0.25]) == pytest.approx(-SQRT2)


def test_gram_matrix_on_a_fine_grid():
    spec = BasisSpec(BasisKind.DOT_PRODUCT, 1)
    gram = basis.gram_check(spec, np.array([[1], [2], [-1]]), grid_size=1024)
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-6)
