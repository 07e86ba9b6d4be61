"""Generalized conditional displacement and the d-legged cat states it creates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .oscillator import coherent_state, destroy, displacement, fock_state, number_op
from .qudit import clock, quadrature_state


class DegenerateNormError(ValueError):
    """The requested cat state has vanishing norm (e.g. alpha = 0 with m != 0)."""


NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class CatSpec:
    d: int
    m: int
    alpha: complex

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if not 0 <= self.m < self.d:
            raise ValueError(f"parity index m={self.m} out of range for d={self.d}")


def _dim(osc) -> int:
    return osc.cutoff if hasattr(osc, "cutoff") else int(osc)


def generalized_cd(d: int, alpha: complex, osc) -> np.ndarray:
    """Block-diagonal ``Σ_s |s><s| ⊗ D(alpha ω^s)`` on ``[d, n]``."""
    n = _dim(osc)
    omega = np.exp(2j * np.pi / d)
    out = np.zeros((d * n, d * n), dtype=complex)
    for s in range(d):
        out[s * n:(s + 1) * n, s * n:(s + 1) * n] = displacement(alpha * omega**s, n)
    return out


def generalized_cd_expm(d: int, alpha: complex, osc) -> np.ndarray:
    """Same operator built as ``expm(alpha Z ⊗ a† - alpha* Z† ⊗ a)``."""
    n = _dim(osc)
    z = clock(d)
    a = destroy(n)
    gen = alpha * np.kron(z, a.conj().T) - np.conj(alpha) * np.kron(z.conj().T, a)
    return linalg.expm_pade(gen)


def cat_norm(d: int, m: int, alpha: complex) -> complex:
    """``N_m(alpha) = Σ_t ω^{-tm} exp((ω^t - 1)|alpha|^2)``.

    Equals ``||Σ_s ω^{-sm}|alpha ω^s>||^2 / d``; only ``|alpha|`` enters since
    the coherent-state Gram matrix is rotation invariant.
    """
    t = np.arange(d)
    omega = np.exp(2j * np.pi * t / d)
    return complex(np.sum(omega ** (-m) * np.exp((omega - 1) * abs(alpha) ** 2)))


def cat_norm_gram(d: int, m: int, alpha: complex) -> float:
    """Same quantity from the explicit coherent-state Gram matrix."""
    from .oscillator import coherent_overlap

    omega = np.exp(2j * np.pi / d)
    total = 0j
    for s in range(d):
        for r in range(d):
            total += (
                omega ** (s * m) * omega ** (-r * m)
                * coherent_overlap(alpha * omega**s, alpha * omega**r)
            )
    return total.real / d


def cat_state(spec: CatSpec, osc) -> tuple[np.ndarray, float]:
    """``|C_d^m(alpha)> ∝ Σ_s ω^{-sm} |alpha ω^s>`` and its norm factor ``N_m``."""
    n = _dim(osc)
    norm = cat_norm(spec.d, spec.m, spec.alpha).real
    if norm < NORM_FLOOR:
        raise DegenerateNormError(
            f"N_m(alpha) = {norm:.3g} for d={spec.d}, m={spec.m}, alpha={spec.alpha}"
        )
    omega = np.exp(2j * np.pi / spec.d)
    psi = np.zeros(n, dtype=complex)
    for s in range(spec.d):
        psi += omega ** (-s * spec.m) * coherent_state(spec.alpha * omega**s, n)
    return linalg.normalize(psi), norm


def parity_projector(d: int, m: int, osc) -> np.ndarray:
    n = _dim(osc)
    return np.diag((np.arange(n) % d == m).astype(complex))


def cd_kraus(d: int, alpha: complex, m_out: int, m_in: int, osc) -> np.ndarray:
    """``<m_out| CD_d(alpha) |m_in> = (1/d) Σ_s ω^{-s(m_out - m_in)} D(alpha ω^s)``."""
    n = _dim(osc)
    omega = np.exp(2j * np.pi / d)
    k = np.zeros((n, n), dtype=complex)
    for s in range(d):
        k += omega ** (-s * (m_out - m_in)) * displacement(alpha * omega**s, n)
    return k / d


def contract_ancilla(op: np.ndarray, bra: np.ndarray, ket: np.ndarray, n: int) -> np.ndarray:
    """``<bra| op |ket>`` over the ancilla (first) factor of a ``[d, n]`` operator."""
    d = len(bra)
    blocks = op.reshape(d, n, d, n)
    return np.einsum("i,iajb,j->ab", np.conj(bra), blocks, ket)


def generate_cat_via_cd(d: int, alpha: complex, osc) -> list[dict]:
    """Apply ``CD_d(alpha)`` to ``|m=0> ⊗ |0>`` and project the ancilla on each ``|m>``.

    Each outcome carries the projected probability and, independently, the
    closed-form value ``N_m / d``.
    """
    n = _dim(osc)
    psi = generalized_cd(d, alpha, n) @ np.kron(quadrature_state(d, "m", 0), fock_state(0, n))
    psi = psi.reshape(d, n)
    f = np.stack([quadrature_state(d, "m", m) for m in range(d)], axis=1)
    branches = f.conj().T @ psi
    out = []
    for m in range(d):
        vec = branches[m]
        prob = float(np.vdot(vec, vec).real)
        post = vec / math.sqrt(prob) if prob > NORM_FLOOR else None
        out.append({
            "m": m,
            "probability": prob,
            "probability_closed_form": cat_norm(d, m, alpha).real / d,
            "post_state": post,
        })
    return out


def default_error_set(osc, phi: float = 0.1) -> list[np.ndarray]:
    a = destroy(osc)
    n = number_op(osc)
    return [
        np.eye(a.shape[0], dtype=complex),
        a,
        a.conj().T,
        n,
        np.diag(np.exp(1j * phi * np.arange(a.shape[0]))),
    ]


def kl_check(d: int, alpha: complex, errors, osc, tol: float = 1e-3,
             include_identity: bool = True) -> dict:
    """Knill-Laflamme deviations of the code ``{C_d^0, C_d^{⌊d/2⌋}}``.

    Returns ``deviation[k, l, i, j] = <i|F_k† F_l|j> - c_kl δ_ij`` with
    ``c_kl`` the mean of the two diagonal entries and ``F_k`` the error
    ``E_k`` rescaled to unit mean norm on the code space. The conditions are
    invariant under that rescaling; it makes the tolerance independent of the
    photon number. With ``include_identity`` the identity is prepended to
    ``errors`` unless already present.
    """
    n = _dim(osc)
    errors = [np.asarray(e, dtype=complex) for e in errors]
    eye = np.eye(n)
    if include_identity and not any(np.allclose(e, eye) for e in errors):
        errors = [eye.astype(complex)] + errors
    logical = [cat_state(CatSpec(d, 0, alpha), n)[0], cat_state(CatSpec(d, d // 2, alpha), n)[0]]
    basis = np.stack(logical, axis=1)
    images = []
    for e in errors:
        img = e @ basis
        scale = math.sqrt(np.sum(np.abs(img) ** 2) / 2)
        if scale < NORM_FLOOR:
            raise DegenerateNormError("an error operator annihilates the code space")
        images.append(img / scale)
    k = len(errors)
    dev = np.zeros((k, k, 2, 2), dtype=complex)
    for i in range(k):
        for j in range(k):
            g = images[i].conj().T @ images[j]
            c = (g[0, 0] + g[1, 1]) / 2
            dev[i, j] = g - c * np.eye(2)
    worst = float(np.abs(dev).max())
    return {"deviation": dev, "max_deviation": worst, "correctable": worst < tol}
