import numpy as np
import pytest

from qdilemma.channel import initial_state
from qdilemma.errors import NotHermitian, ValidationFailed
from qdilemma.game import unitary_2p_batch
from qdilemma.linalg import (
    I2, I4, DensityMatrix4, adjoint, frobenius_distance, hermitian_eigenvalues, mat_mul,
    tensor_product, trace,
)

from conftest import random_matrix


def test_tensor_identity():
    assert np.array_equal(tensor_product(I2, I2), I4)


def test_tensor_diagonal():
    q = np.diag([1j, -1j])
    assert np.allclose(tensor_product(q, q), np.diag([-1, 1, 1, -1]), atol=0)


def test_tensor_basis_order():
    # Alice's qubit is the left factor: X (x) I maps |00> to |10>
    x = np.array([[0, 1], [1, 0]])
    out = tensor_product(x, I2) @ np.array([1, 0, 0, 0])
    assert np.array_equal(out, [0, 0, 1, 0])


def test_mixed_product_property(rng):
    for _ in range(100):
        a, b, c, d = (random_matrix(rng, 2) for _ in range(4))
        lhs = tensor_product(a, b) @ tensor_product(c, d)
        rhs = tensor_product(a @ c, b @ d)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_tensor_associative_up_to_reshape(rng):
    a, b, c = (random_matrix(rng, 2) for _ in range(3))
    assert np.max(np.abs(np.kron(tensor_product(a, b), c) - np.kron(a, tensor_product(b, c)))) <= 1e-12


def test_adjoint_examples(rng):
    assert np.array_equal(adjoint(I2), I2)
    assert np.array_equal(adjoint([[0, 1], [-1, 0]]), [[0, -1], [1, 0]])
    m = random_matrix(rng, 4)
    assert np.array_equal(adjoint(adjoint(m)), m)


def test_adjoint_times_unitary_is_identity(rng):
    for t, p in rng.uniform(0, [np.pi, np.pi / 2], size=(50, 2)):
        u = unitary_2p_batch(t, p)
        assert np.max(np.abs(adjoint(u) @ u - I2)) <= 1e-12


def test_trace_examples(rng):
    assert trace(I4) == 4
    for _ in range(20):
        a, b = random_matrix(rng, 2), random_matrix(rng, 2)
        assert abs(trace(tensor_product(a, b)) - trace(a) * trace(b)) <= 1e-12
    for mu in np.linspace(0, 1, 11):
        assert abs(trace(initial_state(mu).mat) - 1) <= 1e-12


def test_mat_mul_dimension_mismatch():
    with pytest.raises(ValueError):
        mat_mul(I2, I4)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        tensor_product([[np.nan, 0], [0, 1]], I2)


def test_eigenvalues_identity_and_diagonal():
    assert np.allclose(hermitian_eigenvalues(I4), [1, 1, 1, 1], atol=1e-12)
    assert np.allclose(hermitian_eigenvalues(initial_state(0.0).mat), [0, 0, 0.5, 0.5], atol=1e-12)


def test_eigenvalues_half_decohered_state():
    # the |00>,|11> block is [[1/2, -i/4], [i/4, 1/2]] -> 1/2 -+ 1/4
    assert np.allclose(hermitian_eigenvalues(initial_state(0.5).mat), [0, 0, 0.25, 0.75], atol=1e-9)


def test_eigenvalues_match_lapack(rng):
    for _ in range(200):
        x = random_matrix(rng, 4)
        h = x + x.conj().T
        got = hermitian_eigenvalues(h)
        assert np.max(np.abs(got - np.linalg.eigvalsh(h))) <= 1e-9
        assert abs(got.sum() - np.trace(h).real) <= 1e-9


def test_eigenvalues_reject_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigenvalues(np.triu(np.ones((4, 4))))


def test_frobenius():
    assert frobenius_distance(I4, I4) == 0
    assert frobenius_distance(I4, np.zeros((4, 4))) == 2.0


def test_frobenius_symmetric(rng):
    a, b = random_matrix(rng, 4), random_matrix(rng, 4)
    assert frobenius_distance(a, b) == frobenius_distance(b, a)


def test_density_matrix_validation():
    with pytest.raises(ValidationFailed):
        DensityMatrix4(np.diag([1.0, 0, 0, 0.5]))
    with pytest.raises(ValidationFailed):
        DensityMatrix4(np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(ValidationFailed):
        DensityMatrix4(np.triu(np.ones((4, 4))) / 4)


def test_density_matrix_is_read_only():
    rho = initial_state(0.3)
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1.0
