import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcdsim import linalg
from gcdsim.linalg import (SpaceDescriptor, expm_blocks, expm_eig, expm_pade, fidelity,
                           matrix_exponential, partial_trace, tensor, trace_norm)
from gcdsim.oscillator import coherent_state, fock_state

from conftest import random_dm, random_state

seeds = st.integers(0, 2**32 - 1)


def anti_hermitian(rng, n):
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (h - h.conj().T) / 2


class TestMatrixExponential:
    def test_zero_gives_identity(self):
        assert np.allclose(matrix_exponential(np.zeros((3, 3))), np.eye(3), atol=1e-15)

    def test_scalar_phase(self):
        out = matrix_exponential(1j * np.pi * np.eye(2))
        assert np.abs(out + np.eye(2)).max() < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_anti_hermitian_is_unitary_and_routes_agree(self, seed):
        a = anti_hermitian(np.random.default_rng(seed), 6)
        u = matrix_exponential(a)
        assert np.linalg.norm(u.conj().T @ u - np.eye(6), 2) < 1e-10
        assert np.abs(expm_pade(a) - expm_eig(a)).max() < 1e-9

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_inverse_pair(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        prod = matrix_exponential(a) @ matrix_exponential(-a)
        assert np.abs(prod - np.eye(5)).max() < 1e-10

    def test_rejects_non_finite(self):
        m = np.eye(2)
        m[0, 1] = np.nan
        with pytest.raises(ValueError):
            matrix_exponential(m)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            matrix_exponential(np.zeros((2, 3)))

    def test_blockwise_matches_dense(self, rng):
        charges = np.array([0, 1, 0, 2, 1])
        a = anti_hermitian(rng, 5)
        a[charges[:, None] != charges[None, :]] = 0
        assert np.abs(expm_blocks(a, charges) - matrix_exponential(a)).max() < 1e-12

    def test_blockwise_rejects_mixing(self, rng):
        with pytest.raises(ValueError, match="mixes"):
            expm_blocks(anti_hermitian(rng, 3), [0, 0, 1])


class TestTensor:
    def test_identities(self):
        assert np.array_equal(tensor(np.eye(2), np.eye(3)), np.eye(6))

    def test_diagonal(self):
        out = tensor(np.diag([1, -1]), np.eye(2))
        assert np.array_equal(out, np.diag([1, 1, -1, -1]))

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_mixed_product(self, seed):
        rng = np.random.default_rng(seed)
        a, c = (rng.normal(size=(2, 2)) for _ in range(2))
        b, d = (rng.normal(size=(3, 3)) for _ in range(2))
        lhs = tensor(a, b) @ tensor(c, d)
        assert np.abs(lhs - tensor(a @ c, b @ d)).max() < 1e-12

    def test_space_descriptor(self):
        s = SpaceDescriptor((4, 10))
        assert s.total == 40
        assert s.concat(SpaceDescriptor((3,))).dims == (4, 10, 3)
        with pytest.raises(ValueError):
            SpaceDescriptor((0, 2))

    def test_aliases(self):
        assert linalg.tensor_product is tensor
        assert linalg.state_fidelity is fidelity


class TestPartialTrace:
    def test_product_state(self, rng):
        ra, rb = random_dm(rng, 2), random_dm(rng, 3)
        assert np.abs(partial_trace(np.kron(ra, rb), [2, 3], keep=1) - rb).max() < 1e-12
        assert np.abs(partial_trace(np.kron(ra, rb), [2, 3], keep=0) - ra).max() < 1e-12

    def test_bell_pair(self):
        phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        red = partial_trace(np.outer(phi, phi), [2, 2], keep=1)
        assert np.abs(red - np.eye(2) / 2).max() < 1e-15

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_schmidt_spectra_agree(self, seed):
        psi = random_state(np.random.default_rng(seed), 12)
        rho = np.outer(psi, psi.conj())
        wa = np.sort(np.linalg.eigvalsh(partial_trace(rho, [3, 4], 0)))
        wb = np.sort(np.linalg.eigvalsh(partial_trace(rho, [3, 4], 1)))[-3:]
        oracle = np.sort(np.linalg.svd(psi.reshape(3, 4), compute_uv=False) ** 2)
        assert np.abs(wa - wb).max() < 1e-10
        assert np.abs(wa - oracle).max() < 1e-10
        assert abs(np.trace(partial_trace(rho, [3, 4], 0)) - 1) < 1e-12

    def test_keep_out_of_range(self):
        with pytest.raises(IndexError):
            partial_trace(np.eye(4) / 4, [2, 2], keep=2)


class TestFidelity:
    def test_self(self, rng):
        psi = random_state(rng, 5)
        assert abs(fidelity(psi, psi) - 1) < 1e-12

    def test_orthogonal(self):
        assert fidelity(fock_state(0, 4), fock_state(1, 4)) == 0

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 1 + 1j, 2.5])
    def test_vacuum_vs_coherent(self, alpha):
        f = fidelity(fock_state(0, 80), coherent_state(alpha, 80))
        assert abs(f - np.exp(-abs(alpha) ** 2)) < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_symmetry_mixed(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_dm(rng, 4), random_dm(rng, 4, rank=2)
        assert abs(fidelity(a, b) - fidelity(b, a)) < 1e-12

    def test_pure_against_mixed_route(self, rng):
        psi, rho = random_state(rng, 4), random_dm(rng, 4)
        assert abs(fidelity(psi, rho) - fidelity(np.outer(psi, psi.conj()), rho)) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(np.ones(2), np.ones(3))


def test_trace_norm_of_difference(rng):
    a, b = random_dm(rng, 4), random_dm(rng, 4)
    assert trace_norm(a - a) == pytest.approx(0, abs=1e-14)
    assert 0 < trace_norm(a - b) <= 2
