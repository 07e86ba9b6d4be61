"""Truncated Fock space: ladder operators, displacements, coherent states, Wigner."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import tolerances as tol
from .linalg import matrix_exponential


class CutoffWarning(UserWarning):
    """A displacement or state is too large for the Fock cutoff."""


class CutoffError(RuntimeError):
    """A state left the cutoff-safe region while a run was in progress."""


@dataclass(frozen=True)
class FockSpace:
    cutoff: int = 100

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError(f"Fock cutoff must be >= 2, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return self.cutoff


def _n(space) -> int:
    return space.cutoff if isinstance(space, FockSpace) else int(space)


@lru_cache(maxsize=64)
def _ladder(n: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    a.setflags(write=False)
    return a


def destroy(space) -> np.ndarray:
    return _ladder(_n(space)).copy()


def fock_operators(space) -> dict[str, np.ndarray]:
    """Ladder and quadrature operators with ``q = (a + a†)/√2``, ``p = -i(a - a†)/√2``."""
    a = destroy(space)
    adag = a.conj().T
    return {
        "a": a,
        "adag": adag,
        "q": (a + adag) / math.sqrt(2),
        "p": -1j * (a - adag) / math.sqrt(2),
        "n": adag @ a,
    }


def number_op(space) -> np.ndarray:
    return np.diag(np.arange(_n(space), dtype=float)).astype(complex)


def fock_state(n: int, space) -> np.ndarray:
    dim = _n(space)
    if not 0 <= n < dim:
        raise IndexError(f"Fock level {n} outside cutoff {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1
    return v


def vacuum_dm(space) -> np.ndarray:
    v = fock_state(0, space)
    return np.outer(v, v)


def top_population(state, fraction: float = 0.1) -> float:
    """Population in the top ``fraction`` of Fock levels (at least one level)."""
    state = np.asarray(state, dtype=complex)
    dim = state.shape[0]
    k = max(1, int(math.ceil(fraction * dim)))
    if state.ndim == 1:
        return float(np.sum(np.abs(state[-k:]) ** 2))
    return float(np.real(np.diag(state)[-k:]).sum())


def is_cutoff_safe(state, threshold: float = tol.CUTOFF_SAFE_POP) -> bool:
    return top_population(state) < threshold


def _check_alpha(alpha: complex, dim: int) -> None:
    if abs(alpha) ** 2 > dim / 4:
        warnings.warn(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds cutoff/4 = {dim / 4:.3g}",
            CutoffWarning,
            stacklevel=3,
        )


def displacement(alpha: complex, space) -> np.ndarray:
    """``expm(alpha a† - alpha* a)`` on the truncated space (exactly unitary)."""
    dim = _n(space)
    _check_alpha(alpha, dim)
    a = _ladder(dim)
    return matrix_exponential(alpha * a.conj().T - np.conj(alpha) * a)


def rotation(phi: float, space) -> np.ndarray:
    return np.diag(np.exp(1j * phi * np.arange(_n(space))))


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    # log-space to avoid overflow of alpha^n / sqrt(n!)
    logmag = np.zeros(dim)
    if alpha != 0:
        logmag = n * math.log(abs(alpha)) - 0.5 * np.array([math.lgamma(k + 1) for k in n])
        amp = np.exp(logmag - abs(alpha) ** 2 / 2) * np.exp(1j * n * np.angle(alpha))
    else:
        amp = np.zeros(dim, dtype=complex)
        amp[0] = 1
    return amp.astype(complex)


def coherent_state(alpha: complex, space) -> np.ndarray:
    """Coherent state from its Fock series, renormalized after truncation."""
    dim = _n(space)
    _check_alpha(alpha, dim)
    amp = coherent_amplitudes(alpha, dim)
    return amp / np.linalg.norm(amp)


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """``<alpha|beta>`` of untruncated coherent states."""
    return complex(np.exp(-abs(alpha) ** 2 / 2 - abs(beta) ** 2 / 2 + np.conj(alpha) * beta))


def _as_dm(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def wigner(state, q, p) -> np.ndarray:
    """Wigner function ``W(q, p) = Tr[rho D(g) P D(-g)] / pi``, ``g = (q + ip)/√2``.

    Displaced-parity matrix elements are generated with the Laguerre
    recurrence, so the result is exact for the given truncated ``rho``.
    Returns an array indexed ``[p_index, q_index]``.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if q.size == 0 or p.size == 0:
        raise ValueError("wigner: empty grid")
    rho = _as_dm(state)
    dim = rho.shape[0]
    qq, pp = np.meshgrid(q, p)
    g = (qq + 1j * pp) / math.sqrt(2)
    two_g = 2 * g
    # row[n] holds <n|W_hat|m> for the current m (n >= m); W_hat = D(g) P D(-g)/pi
    # obeys a W_hat = W_hat (2g - a), which gives the recurrences below.
    base = np.exp(-2 * np.abs(g) ** 2) / math.pi
    row = [base]
    for n in range(1, dim):
        row.append(two_g * row[n - 1] / math.sqrt(n))
    w = np.real(rho[0, 0]) * base
    for n in range(1, dim):
        w = w + 2 * np.real(rho[0, n] * row[n])
    for m in range(1, dim):
        prev_row = row
        new = [None] * dim
        new[m] = (2 * np.conj(g) * prev_row[m] - math.sqrt(m) * prev_row[m - 1]) / math.sqrt(m)
        for n in range(m + 1, dim):
            new[n] = (two_g * new[n - 1] - math.sqrt(m) * prev_row[n - 1]) / math.sqrt(n)
        w = w + np.real(rho[m, m] * new[m])
        for n in range(m + 1, dim):
            w = w + 2 * np.real(rho[m, n] * new[n])
        row = new
    return w


def wigner_parity(state, q, p, cutoff: int | None = None) -> np.ndarray:
    """Direct displaced-parity evaluation, one displacement per grid point.

    Slow; meant as an independent check of :func:`wigner`. ``cutoff`` pads the
    working space so the truncated displacement is accurate.
    """
    rho = _as_dm(state)
    dim = rho.shape[0]
    big = max(cutoff or 0, dim)
    padded = np.zeros((big, big), dtype=complex)
    padded[:dim, :dim] = rho
    parity = np.diag((-1.0) ** np.arange(big))
    q = np.atleast_1d(q)
    p = np.atleast_1d(p)
    out = np.empty((p.size, q.size))
    for i, pv in enumerate(p):
        for j, qv in enumerate(q):
            d = displacement((qv + 1j * pv) / math.sqrt(2), big)
            out[i, j] = np.real(np.trace(padded @ d @ parity @ d.conj().T)) / math.pi
    return out
