import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense, entropy_bits, ptrace_keep
from qmono.qcore import (
    DensityMatrix,
    ProbabilityDistribution,
    StateError,
    StateVector,
    eigenvalues,
    fibers,
    gram_spectrum,
    ket,
    local_unitary,
    partial_trace,
    product_state,
    random_density,
    random_pure,
    random_unitary,
    reduced_spectrum,
    shannon_entropy,
    tensor,
    trace_distance,
    von_neumann_entropy,
)

S = 1 / math.sqrt(2)


def dm(m, dims=None):
    m = np.asarray(m, dtype=complex)
    return DensityMatrix(dims or (m.shape[0],), m)


# ---------------------------------------------------------------- construction


def test_state_vector_rejects_unnormalized():
    with pytest.raises(StateError):
        StateVector((2,), np.array([1.0, 1.0]))


def test_state_vector_rejects_dimension_mismatch():
    with pytest.raises(StateError):
        StateVector((2, 2), np.array([1.0, 0, 0]))


def test_density_rejects_bad_trace_and_negative_eigenvalue():
    with pytest.raises(StateError):
        dm(np.eye(2))
    with pytest.raises(StateError):
        dm(np.diag([1.1, -0.1]))


def test_density_rejects_non_hermitian():
    with pytest.raises(StateError):
        dm([[0.5, 0.1], [0.0, 0.5]])


def test_density_symmetrizes_within_tolerance():
    rho = dm([[0.5, 1e-11], [0.0, 0.5]])
    assert np.allclose(rho.entries, rho.entries.conj().T, atol=0)


def test_arrays_are_read_only():
    v = ket((2,), "0")
    with pytest.raises(ValueError):
        v.amplitudes[0] = 0


def test_probability_distribution_checks():
    with pytest.raises(StateError):
        ProbabilityDistribution(np.array([0.5, 0.4]))
    with pytest.raises(StateError):
        ProbabilityDistribution(np.array([1.2, -0.2]))
    assert len(ProbabilityDistribution(np.array([0.25] * 4))) == 4


# ---------------------------------------------------------------- tensor


def test_tensor_basis_kets():
    out = tensor(ket((2,), "0"), ket((2,), "1"))
    assert out.dims == (2, 2)
    assert np.allclose(out.amplitudes, ket((2, 2), "01").amplitudes)


def test_tensor_maximally_mixed():
    half = dm(np.eye(2) / 2)
    out = tensor(half, half)
    assert out.dims == (2, 2)
    assert np.allclose(out.entries, np.eye(4) / 4)


def test_tensor_builds_case_ii_state():
    bell = StateVector((2, 2), np.array([S, 0, 0, S]))
    out = tensor(ket((2,), "0"), bell)
    expected = np.zeros(8)
    expected[0] = expected[3] = S
    assert np.allclose(out.amplitudes, expected)


# ---------------------------------------------------------------- partial trace


def test_partial_trace_ghz_pair():
    ghz = StateVector((2, 2, 2), np.array([S, 0, 0, 0, 0, 0, 0, S]))
    red = partial_trace(ghz, [0, 1])
    assert np.allclose(red.entries, np.diag([0.5, 0, 0, 0.5]))


def test_partial_trace_of_product():
    rng = np.random.default_rng(1)
    rho = random_density((3,), rng)
    sigma = random_density((2,), rng)
    out = partial_trace(tensor(rho, sigma), [0])
    assert np.allclose(out.entries, rho.entries, atol=1e-12)


def test_partial_trace_bell():
    bell = StateVector((2, 2), np.array([S, 0, 0, S]))
    assert np.allclose(partial_trace(bell, [1]).entries, np.eye(2) / 2)


def test_partial_trace_matches_index_summation_oracle():
    rng = np.random.default_rng(5)
    psi = random_pure((2, 3, 2), rng)
    for keep in ([0], [1], [2], [0, 2], [1, 2]):
        expect = ptrace_keep(dense(psi.amplitudes), (2, 3, 2), keep)
        assert np.allclose(partial_trace(psi, keep).entries, expect, atol=1e-12)


def test_partial_trace_keep_all_and_bad_index():
    psi = ket((2, 2), "01")
    assert np.allclose(partial_trace(psi, [0, 1]).entries, dense(psi.amplitudes))
    with pytest.raises(IndexError):
        partial_trace(psi, [2])


def test_fibers_and_gram_spectrum_agree_with_dense():
    rng = np.random.default_rng(9)
    psi = random_pure((2, 2, 3), rng)
    f = fibers(psi, [0, 2])
    assert f.shape == (6, 2)
    dense_eigs = np.sort(np.linalg.eigvalsh(partial_trace(psi, [0, 2]).entries))[::-1]
    fast = np.sort(reduced_spectrum(psi, [0, 2]))[::-1]
    # rank is at most 2 (the traced qubit), so compare the top two
    assert np.allclose(fast[:2], dense_eigs[:2], atol=1e-12)
    assert np.allclose(np.sort(gram_spectrum(f.T))[::-1][:2], dense_eigs[:2], atol=1e-12)


def test_cat_state_fibers_scale_to_twenty_partners():
    n = 21
    amp = np.zeros(2**n)
    amp[0] = amp[-1] = S
    psi = StateVector((2,) * n, amp)
    spec = reduced_spectrum(psi, [0, 1])
    assert np.allclose(sorted(spec, reverse=True)[:2], [0.5, 0.5])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(2, 4), min_size=2, max_size=3), st.integers(0, 2**31))
def test_partial_trace_vector_matches_density(dims, seed):
    if np.prod(dims) > 64:
        return
    rng = np.random.default_rng(seed)
    psi = random_pure(dims, rng)
    keep = sorted(set(rng.choice(len(dims), size=rng.integers(1, len(dims)), replace=False).tolist()))
    a = partial_trace(psi, keep).entries
    b = partial_trace(psi.to_density(), keep).entries
    assert np.max(np.abs(a - b)) <= 1e-9


# ---------------------------------------------------------------- spectra and entropy


def test_eigenvalue_examples():
    assert np.allclose(eigenvalues(dm(np.eye(2) / 2)), [0.5, 0.5])
    assert np.allclose(eigenvalues(dm(np.diag([1.0, 0.0]))), [1, 0])
    assert np.allclose(eigenvalues(dm(np.diag([0.5, 0, 0, 0.5]))), [0.5, 0.5, 0, 0])


def test_eigenvalues_clamp_small_negatives():
    rho = dm(np.diag([1 + 5e-13, -5e-13]))
    w = eigenvalues(rho)
    assert w[-1] == 0.0
    assert list(w) == sorted(w, reverse=True)


def test_von_neumann_examples():
    assert von_neumann_entropy(dm(np.diag([1.0, 0]))) == pytest.approx(0, abs=1e-12)
    assert von_neumann_entropy(dm(np.eye(2) / 2)) == pytest.approx(1, abs=1e-12)
    assert von_neumann_entropy(dm(np.diag([0.25, 0.75]))) == pytest.approx(entropy_bits([0.25, 0.75]), abs=1e-12)
    assert entropy_bits([0.25, 0.75]) == pytest.approx(0.811278, abs=1e-6)


def test_shannon_examples():
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(1)
    assert shannon_entropy([1.0, 0.0]) == 0
    assert shannon_entropy([1 / 3, 2 / 3]) == pytest.approx(math.log2(3) - 2 / 3, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(2,), (3,), (2, 2), (2, 3), (2, 2, 2)]), st.integers(0, 2**31))
def test_entropy_range_and_unitary_invariance(dims, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(dims, rng)
    s = von_neumann_entropy(rho)
    d = int(np.prod(dims))
    assert -1e-9 <= s <= math.log2(d) + 1e-9
    u = random_unitary(d, rng)
    rotated = dm(u @ rho.entries @ u.conj().T, dims)
    assert abs(von_neumann_entropy(rotated) - s) <= 1e-9
    assert abs(s - entropy_bits(np.linalg.eigvalsh(rho.entries).clip(0))) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(2, 4), st.integers(0, 2**31))
def test_tensor_then_trace_returns_first_factor(da, db, seed):
    rng = np.random.default_rng(seed)
    rho = random_density((da,), rng)
    sigma = random_density((db,), rng)
    out = partial_trace(tensor(rho, sigma), [0])
    assert np.max(np.abs(out.entries - rho.entries)) <= 1e-9


def test_local_unitary_preserves_reduced_spectrum():
    rng = np.random.default_rng(3)
    psi = random_pure((2, 3), rng)
    us = [random_unitary(2, rng), random_unitary(3, rng)]
    moved = local_unitary(psi, us)
    assert np.allclose(reduced_spectrum(psi, [0]), reduced_spectrum(moved, [0]), atol=1e-12)


def test_trace_distance():
    a = ket((2,), "0")
    b = ket((2,), "1")
    plus = product_state([np.array([S, S])])
    assert trace_distance(a, a) == pytest.approx(0, abs=1e-12)
    assert trace_distance(a, b) == pytest.approx(1)
    assert trace_distance(a, plus) == pytest.approx(S, abs=1e-12)
