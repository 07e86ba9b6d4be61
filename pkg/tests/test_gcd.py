import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcdsim.gcd import (CatSpec, DegenerateNormError, cat_norm, cat_norm_gram, cat_state,
                        cd_kraus, default_error_set, generalized_cd, generalized_cd_expm,
                        generate_cat_via_cd, kl_check, parity_projector)
from gcdsim.linalg import fidelity
from gcdsim.oscillator import destroy, displacement, fock_state
from gcdsim.qudit import quadrature_state

ALPHAS = [0.5, 1.0, 2.0, cmath.exp(1j * math.pi / 4) * math.sqrt(math.pi)]


class TestGeneralizedCD:
    def test_qubit_block_form(self):
        alpha = 0.8 - 0.3j
        n = 60
        p0, p1 = np.diag([1, 0]), np.diag([0, 1])
        expected = np.kron(p0, displacement(alpha, n)) + np.kron(p1, displacement(-alpha, n))
        assert np.abs(generalized_cd(2, alpha, n) - expected).max() < 1e-10

    def test_zero(self):
        assert np.abs(generalized_cd(3, 0, 10) - np.eye(30)).max() < 1e-15

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_unitary(self, d, alpha):
        u = generalized_cd(d, alpha, 60)
        assert np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() < 1e-10

    def test_block_vs_generator_exponential(self):
        a = generalized_cd(4, 1 + 0.5j, 80)
        b = generalized_cd_expm(4, 1 + 0.5j, 80)
        assert np.abs(a - b).max() < 1e-9


class TestCatState:
    @pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
    def test_qubit_norm(self, alpha):
        assert cat_norm(2, 0, alpha).real == pytest.approx(1 + math.exp(-2 * alpha**2), abs=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 5),
           st.complex_numbers(min_magnitude=0.2, max_magnitude=2.5, allow_nan=False,
                              allow_infinity=False))
    def test_norm_formula_matches_gram(self, d, m, alpha):
        m %= d
        assert abs(cat_norm(d, m, alpha) - cat_norm_gram(d, m, alpha)) < 1e-10

    def test_zero_amplitude(self):
        psi, norm = cat_state(CatSpec(4, 0, 0.0), 10)
        assert np.allclose(psi, fock_state(0, 10))
        assert norm == pytest.approx(4)

    def test_degenerate_norm(self):
        with pytest.raises(DegenerateNormError):
            cat_state(CatSpec(4, 1, 0.0), 10)

    @pytest.mark.parametrize("m", range(4))
    def test_parity_support(self, m):
        psi, _ = cat_state(CatSpec(4, m, 2.0), 100)
        off = np.eye(100) - parity_projector(4, m, 100)
        assert np.linalg.norm(off @ psi) ** 2 < 1e-10

    def test_complex_amplitude_normalized(self):
        psi, _ = cat_state(CatSpec(4, 1, 1.2 * cmath.exp(0.7j)), 60)
        assert abs(np.vdot(psi, psi) - 1) < 1e-12

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CatSpec(1, 0, 1.0)
        with pytest.raises(ValueError):
            CatSpec(4, 4, 1.0)


class TestKraus:
    def test_qubit_case(self):
        alpha = 1.1
        k = cd_kraus(2, alpha, 0, 0, 50)
        assert np.abs(k - (displacement(alpha, 50) + displacement(-alpha, 50)) / 2).max() < 1e-14

    def test_zero_amplitude(self):
        assert np.abs(cd_kraus(4, 0, 1, 1, 8) - np.eye(8)).max() < 1e-15
        assert np.abs(cd_kraus(4, 0, 2, 1, 8)).max() < 1e-15

    def test_completeness(self):
        alpha = math.sqrt(math.pi / 2) * cmath.exp(1j * math.pi / 4) * math.sqrt(2)
        total = sum(k.conj().T @ k for k in (cd_kraus(4, alpha, m, 0, 100) for m in range(4)))
        assert np.abs(total - np.eye(100)).max() < 1e-10

    def test_matches_ancilla_projection(self):
        n = 40
        u = generalized_cd(3, 0.9j, n).reshape(3, n, 3, n)
        direct = np.einsum("i,iajb,j->ab", quadrature_state(3, "m", 2).conj(), u,
                           quadrature_state(3, "m", 1))
        assert np.abs(direct - cd_kraus(3, 0.9j, 2, 1, n)).max() < 1e-12


class TestCatGeneration:
    def test_four_legged(self):
        out = generate_cat_via_cd(4, 2.0, 100)
        assert len(out) == 4
        for o in out:
            ref, _ = cat_state(CatSpec(4, o["m"], 2.0), 100)
            assert fidelity(o["post_state"], ref) > 1 - 1e-8
        assert abs(sum(o["probability"] for o in out) - 1) < 1e-10

    def test_zero_amplitude(self):
        out = generate_cat_via_cd(4, 0.0, 10)
        assert out[0]["probability"] == pytest.approx(1)
        assert np.allclose(out[0]["post_state"], fock_state(0, 10))
        assert all(o["post_state"] is None for o in out[1:])

    @pytest.mark.parametrize("d", [2, 3, 4])
    @pytest.mark.parametrize("alpha", [1.0, 2.0])
    def test_probability_closed_form(self, d, alpha):
        for o in generate_cat_via_cd(d, alpha, 100):
            assert abs(o["probability"] - o["probability_closed_form"]) < 1e-9

    def test_inverse_norm_convention_is_not_normalized(self):
        # 1/(d N_m) does not sum to one, N_m/d does
        inv = sum(1 / (4 * cat_norm(4, m, 0.8).real) for m in range(4))
        direct = sum(cat_norm(4, m, 0.8).real / 4 for m in range(4))
        assert abs(inv - 1) > 0.1
        assert abs(direct - 1) < 1e-12

    def test_reconstruction(self):
        n = 100
        out = generate_cat_via_cd(4, 1.5, n)
        target = generalized_cd(4, 1.5, n) @ np.kron(quadrature_state(4, "m", 0), fock_state(0, n))
        rebuilt = sum(math.sqrt(o["probability"]) * np.kron(quadrature_state(4, "m", o["m"]),
                                                            o["post_state"]) for o in out)
        assert fidelity(rebuilt, target) > 1 - 1e-10


class TestKnillLaflamme:
    def test_single_shift_d4(self):
        res = kl_check(4, 3.0, [destroy(100)], 100)
        assert res["max_deviation"] < 1e-3
        assert res["correctable"]

    def test_identity_only_exact(self):
        res = kl_check(4, 2.0, [np.eye(60)], 60)
        assert res["max_deviation"] < 1e-12

    def test_qubit_cat_fails_loss(self):
        res = kl_check(2, 2.0, [destroy(60)], 60)
        assert res["max_deviation"] > 0.1
        assert not res["correctable"]

    def test_default_set_needs_larger_code(self):
        # a† a and rotations on top of shifts exceed what d=4 protects
        assert not kl_check(4, 3.0, default_error_set(100), 100)["correctable"]
        n = 100
        a = destroy(n)
        assert kl_check(6, 4.5, [a, a.conj().T], n)["correctable"]

    def test_deviation_shape(self):
        res = kl_check(4, 3.0, default_error_set(80), 80)
        assert res["deviation"].shape == (5, 5, 2, 2)
