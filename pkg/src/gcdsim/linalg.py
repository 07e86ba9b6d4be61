"""Dense linear-algebra substrate.

States and operators are plain numpy arrays. Composite spaces are described by
:class:`SpaceDescriptor`; for ``dims = [d_a, n_b]`` the composite index is
``i = i_a * n_b + i_b`` (``numpy.kron`` ordering, first factor slowest).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import tolerances as tol


@dataclass(frozen=True)
class SpaceDescriptor:
    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.dims)

    def concat(self, other: "SpaceDescriptor") -> "SpaceDescriptor":
        return SpaceDescriptor(self.dims + other.dims)


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def is_unitary(u, atol: float = tol.UNITARY_ATOL) -> bool:
    u = _as_square(u)
    return np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() < atol


def is_normal(m, atol: float = 1e-12) -> bool:
    m = _as_square(m)
    scale = max(1.0, np.abs(m).max())
    return np.abs(m @ m.conj().T - m.conj().T @ m).max() < atol * scale**2


def expm_pade(m) -> np.ndarray:
    """Scaling-and-squaring Pade exponential (scipy)."""
    return sla.expm(_as_square(m))


def expm_eig(m) -> np.ndarray:
    """Exponential of a normal matrix through its eigendecomposition.

    Anti-Hermitian and Hermitian inputs go through ``eigh`` so the result is
    unitary (resp. positive) to machine precision.
    """
    m = _as_square(m)
    if np.allclose(m, -m.conj().T, atol=1e-13, rtol=0):
        # m = -i H with H Hermitian
        w, v = np.linalg.eigh(1j * m)
        return (v * np.exp(-1j * w)) @ v.conj().T
    if np.allclose(m, m.conj().T, atol=1e-13, rtol=0):
        w, v = np.linalg.eigh(m)
        return (v * np.exp(w)) @ v.conj().T
    w, v = np.linalg.eig(m)
    return (v * np.exp(w)) @ np.linalg.inv(v)


def matrix_exponential(m) -> np.ndarray:
    """``exp(m)``; anti-Hermitian generators take the unitary-exact eigh route."""
    m = _as_square(m)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix_exponential: non-finite entries")
    if np.allclose(m, -m.conj().T, atol=1e-13, rtol=0):
        return expm_eig(m)
    return expm_pade(m)


def expm_blocks(m, charges) -> np.ndarray:
    """``exp(m)`` for a generator that conserves ``charges``.

    Indices sharing a charge value form invariant blocks, which are
    exponentiated independently. Entries of ``m`` coupling different charges
    must vanish; this is checked.
    """
    m = _as_square(m)
    charges = np.asarray(charges)
    if charges.shape != (m.shape[0],):
        raise ValueError("one charge per basis index is required")
    if np.any(np.abs(m[charges[:, None] != charges[None, :]]) > 1e-14):
        raise ValueError("generator mixes charge sectors")
    out = np.zeros_like(m)
    for c in np.unique(charges):
        idx = np.flatnonzero(charges == c)
        out[np.ix_(idx, idx)] = matrix_exponential(m[np.ix_(idx, idx)])
    return out


def tensor(*ops) -> np.ndarray:
    """Kronecker product of vectors or matrices, first factor slowest."""
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / n


def validate_density_matrix(rho, atol: float = tol.HERMITIAN_ATOL) -> np.ndarray:
    rho = _as_square(rho)
    if np.abs(rho - rho.conj().T).max() > atol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol.TRACE_ATOL:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.3g}, not 1")
    if np.linalg.eigvalsh(rho).min() < -tol.PSD_ATOL:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def partial_trace(rho, dims: Sequence[int] | SpaceDescriptor, keep: int) -> np.ndarray:
    """Reduced state on factor ``keep`` of a bipartite ``rho``."""
    dims = dims.dims if isinstance(dims, SpaceDescriptor) else tuple(dims)
    if len(dims) != 2:
        raise ValueError("partial_trace supports two-factor spaces")
    if keep not in (0, 1):
        raise IndexError(f"keep index {keep} out of range for 2 subsystems")
    rho = _as_square(rho)
    da, db = dims
    r = rho.reshape(da, db, da, db)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    return np.einsum("ijil->jl", r)


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    # Round-off eigenvalues of a rank-deficient input would enter as sqrt(1e-17).
    w = np.where(w > 1e-13 * max(w.max(), 0), w, 0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(a, b) -> float:
    """|<a|b>|^2 for pure inputs, Uhlmann fidelity otherwise."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.ndim == 1 and b.ndim == 1:
        f = abs(np.vdot(a, b)) ** 2
    elif a.ndim == 1:
        f = np.vdot(a, b @ a).real
    elif b.ndim == 1:
        f = np.vdot(b, a @ b).real
    else:
        # ||sqrt(a) sqrt(b)||_1 is symmetric in a and b by construction.
        f = np.linalg.svd(_psd_sqrt(a) @ _psd_sqrt(b), compute_uv=False).sum() ** 2
    return float(min(max(f, 0.0), 1.0))


def trace_norm(m) -> float:
    m = _as_square(m)
    if np.allclose(m, m.conj().T, atol=1e-14):
        return float(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2)).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def expect(op, state) -> complex:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    return complex(np.einsum("ij,ji->", op, state))


# Names used by callers that think in terms of the operator algebra.
tensor_product = tensor
state_fidelity = fidelity
