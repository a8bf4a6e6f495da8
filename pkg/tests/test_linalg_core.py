import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import oracle_partial_transpose
from qdistill.linalg_core import (
    DenseCapExceeded,
    DensityOperator,
    NotHermitianError,
    SubsystemLayout,
    check_dense_dim,
    dense_cap,
    from_qsm_json,
    partial_trace,
    partial_transpose,
    ptrace,
    ptranspose,
    random_density,
    spectral_decompose,
    tensor_product,
    to_qsm_json,
)
from qdistill.qudit_states import bell_vector


def test_tensor_product_acts_factorwise(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3))
    u, v = rng.normal(size=2), rng.normal(size=3)
    assert np.allclose(tensor_product(a, b) @ tensor_product(u, v), np.kron(a @ u, b @ v))


def test_tensor_product_needs_operand():
    with pytest.raises(ValueError):
        tensor_product()


def test_ptranspose_of_psi00_spectrum():
    v = bell_vector(2, 0, 0)
    lam = np.sort(np.linalg.eigvalsh(ptranspose(np.outer(v, v.conj()), [2, 2], [1])))
    assert np.allclose(lam, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_ptrace_of_four_party_mixture_matches_label_sum(d):
    from qdistill.mixtures import four_party_state

    rho = four_party_state(d).dense
    red = partial_trace(rho, [0, 1]).matrix
    expect = sum(np.outer(bell_vector(d, n, 0), bell_vector(d, n, 0).conj()) for n in range(d)) / d
    assert np.max(np.abs(red - expect)) < 1e-12


def test_ptrace_against_explicit_sum(rng):
    rho = random_density(12, rng)
    t = rho.reshape(3, 4, 3, 4)
    oracle = sum(t[:, j, :, j] for j in range(4))
    assert np.allclose(ptrace(rho, [3, 4], [0]), oracle)
    oracle_b = sum(t[i, :, i, :] for i in range(3))
    assert np.allclose(ptrace(rho, [3, 4], [1]), oracle_b)


def test_ptrace_rejects_bad_indices(rng):
    rho = random_density(4, rng)
    with pytest.raises(IndexError):
        ptrace(rho, [2, 2], [2])
    with pytest.raises(ValueError):
        ptrace(rho, [2, 2], [])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dims=st.lists(st.integers(2, 3), min_size=2, max_size=3), data=st.data())
def test_ptranspose_matches_loop_oracle_and_is_involution(seed, dims, data):
    rng = np.random.default_rng(seed)
    dim = int(np.prod(dims))
    rho = random_density(dim, rng)
    side = data.draw(st.sets(st.integers(0, len(dims) - 1)))
    pt = ptranspose(rho, dims, side)
    assert np.allclose(pt, oracle_partial_transpose(rho, dims, side))
    assert np.array_equal(ptranspose(pt, dims, side), rho)
    assert abs(np.trace(pt) - np.trace(rho)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 12))
def test_spectral_decompose_reconstructs(seed, dim):
    rng = np.random.default_rng(seed)
    m = random_density(dim, rng)
    lam, vecs = spectral_decompose(m)
    assert np.all(np.diff(lam) <= 1e-15)
    assert np.allclose(vecs @ np.diag(lam) @ vecs.conj().T, m, atol=1e-12)
    assert np.allclose(vecs.conj().T @ vecs, np.eye(dim), atol=1e-12)


def test_spectral_decompose_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        spectral_decompose(np.array([[0, 1], [0, 0]], dtype=complex))


def test_density_operator_validation():
    layout = SubsystemLayout.uniform(2, ("A", "B"))
    with pytest.raises(ValueError):
        DensityOperator(np.eye(4), layout).validate()  # trace 4
    with pytest.raises(ValueError):
        DensityOperator(np.diag([1.5, -0.5, 0, 0]), layout).validate()
    with pytest.raises(ValueError):
        DensityOperator(np.eye(3) / 3, layout)
    rho = DensityOperator.from_ket(bell_vector(2, 0, 0), layout)
    rho.validate()
    assert abs(rho.trace() - 1) < 1e-12


def test_layout_parties():
    lay = SubsystemLayout.uniform(3, ("A", "A", "B"))
    assert lay.party_names == ("A", "B")
    assert lay.qudits_of("A") == (0, 1)
    assert lay.dim == 27
    with pytest.raises(ValueError):
        lay.qudits_of("C")


def test_partial_trace_keeps_layout():
    layout = SubsystemLayout.uniform(2, ("A", "B", "C"))
    v = np.kron(bell_vector(2, 0, 0), [1, 0])
    red = partial_trace(DensityOperator.from_ket(v, layout), [2])
    assert red.layout.parties == ("C",)
    assert np.allclose(red.matrix, np.diag([1, 0]))
    pt = partial_transpose(DensityOperator.from_ket(v, layout), [1])
    assert pt.shape == (8, 8)


def test_dense_cap_env(monkeypatch):
    assert dense_cap() == 4096
    monkeypatch.setenv("QDISTILL_DENSE_CAP", "16")
    assert dense_cap() == 16
    with pytest.raises(DenseCapExceeded):
        check_dense_dim(81)
    check_dense_dim(16)


def test_qsm_json_roundtrip(rng):
    m = random_density(4, rng)
    back, dims = from_qsm_json(json.dumps(to_qsm_json(m, [2, 2])))
    assert dims == [2, 2] and np.array_equal(back, m)
    ket, _ = from_qsm_json(to_qsm_json(bell_vector(3, 1, 2), [3, 3]))
    assert ket.shape == (9,)
    with pytest.raises(ValueError):
        to_qsm_json(np.zeros(5), [2, 2])
