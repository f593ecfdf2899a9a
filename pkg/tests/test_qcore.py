import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtime import qcore
from qtime.qcore import DimensionError, HermiticityError, ProductSpace

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


def test_tensor_order_left_outermost():
    a = np.array([1, 0])
    b = np.array([0, 1])
    assert np.array_equal(qcore.tensor(a, b), [0, 1, 0, 0])


def test_tensor_rejects_mixed_ranks():
    with pytest.raises(DimensionError):
        qcore.tensor(np.ones(2), np.eye(2))


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(HermiticityError):
        qcore.eig_hermitian(np.array([[0, 1], [0, 0]]))


@given(seeds, dims)
def test_matexp_is_unitary_and_matches_series(seed, d):
    rng = np.random.default_rng(seed)
    h = qcore.random_hermitian(d, rng, 0.3)
    u = qcore.matexp_hermitian(h, 0.7)
    assert qcore.is_unitary(u)
    # truncated Taylor series oracle, converges fast at this norm
    ref = np.eye(d, dtype=complex)
    term = np.eye(d, dtype=complex)
    for k in range(1, 40):
        term = term @ (-0.7j * h) / k
        ref = ref + term
    assert np.allclose(u, ref, atol=1e-12)


@given(seeds, dims)
def test_propagator_composes(seed, d):
    rng = np.random.default_rng(seed)
    h = qcore.random_hermitian(d, rng)
    u = qcore.propagator(h, 1.3, 0.2) @ qcore.propagator(h, 0.2, -0.5)
    assert np.allclose(u, qcore.propagator(h, 1.3, -0.5), atol=1e-11)


def test_null_space_exact_kernel_keeps_full_precision():
    # a Hermitian matrix with a known two-dimensional kernel
    rng = np.random.default_rng(4)
    v = qcore.random_unitary(5, rng)
    h = v @ np.diag([0, 0, 1, 2, 3.0]) @ v.conj().T
    ns = qcore.null_space(h)
    assert len(ns) == 2
    assert max(np.linalg.norm(h @ x) for x in ns) < 1e-13
    assert qcore.orthonormality_defect(ns) < 1e-13


def test_null_space_non_hermitian_path():
    a = np.array([[1, 1], [0, 0]], dtype=complex)
    (v,) = qcore.null_space(a)
    assert np.linalg.norm(a @ v) < 1e-12


def test_null_space_of_zero_matrix_is_everything():
    assert len(qcore.null_space(np.zeros((3, 3)))) == 3


def test_dft_is_unitary():
    assert qcore.is_unitary(qcore.dft_matrix(7))


def test_product_space_and_partial_project():
    space = ProductSpace.of(A=2, B=3)
    a, b = qcore.random_state(2, np.random.default_rng(0)), qcore.random_state(3, np.random.default_rng(1))
    psi = qcore.tensor(a, b)
    out = qcore.partial_project(a, "A", psi, space)
    assert np.allclose(out, b)
    out = qcore.partial_project(b, "B", psi, space)
    assert np.allclose(out, a)
    assert space.without("A").dims == (3,)


def test_product_space_rejects_duplicate_labels():
    with pytest.raises(ValueError):
        ProductSpace((("A", 2), ("A", 3)))


def test_embed_matches_kron():
    space = ProductSpace.of(A=2, B=3, C=2)
    op = np.arange(9).reshape(3, 3)
    assert np.array_equal(qcore.embed(op, "B", space), np.kron(np.kron(np.eye(2), op), np.eye(2)))


@given(seeds, dims)
def test_random_basis_is_orthonormal_and_complete(seed, d):
    basis = qcore.random_basis(d, np.random.default_rng(seed))
    assert qcore.orthonormality_defect(basis) < 1e-12
    assert qcore.completeness_defect(basis) < 1e-12


def test_frozen_arrays_are_read_only():
    a = qcore.frozen(np.zeros(3))
    with pytest.raises(ValueError):
        a[0] = 1
