"""Heisenberg-Weyl operators and discrete quadrature bases of a d-level qudit.

Fourier convention: ``|m> = (1/√d) Σ_s ω^{sm} |s>`` with ``ω = exp(2πi/d)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuditSpace:
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"qudit dimension must be >= 2, got {self.d}")

    @property
    def omega(self) -> complex:
        return cmath.exp(2j * math.pi / self.d)


def _d(space) -> int:
    return space.d if isinstance(space, QuditSpace) else int(space)


def clock(space) -> np.ndarray:
    d = _d(space)
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def shift(space) -> np.ndarray:
    """|s> -> |s+1 mod d>."""
    d = _d(space)
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def fourier(space) -> np.ndarray:
    d = _d(space)
    s = np.arange(d)
    return np.exp(2j * np.pi * np.outer(s, s) / d) / math.sqrt(d)


def weyl_operators(space) -> dict[str, np.ndarray]:
    d = _d(space)
    f = fourier(d)
    ramp = np.diag(np.arange(d, dtype=float)).astype(complex)
    return {
        "Z": clock(d),
        "X": shift(d),
        "F": f,
        "s_hat": ramp,
        "m_hat": f @ ramp @ f.conj().T,
    }


def quadrature_state(space, basis: str, index: int) -> np.ndarray:
    d = _d(space)
    if not 0 <= index < d:
        raise IndexError(f"index {index} out of range for d={d}")
    if basis == "s":
        v = np.zeros(d, dtype=complex)
        v[index] = 1
        return v
    if basis == "m":
        return fourier(d)[:, index].copy()
    raise ValueError(f"basis must be 's' or 'm', got {basis!r}")
