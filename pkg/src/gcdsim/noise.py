"""Idle evolution of the oscillator under photon loss and number dephasing.

``dρ/dt = κ D[a]ρ + κ_φ D[a†a]ρ``. The two dissipators commute (both preserve
the Fock-index difference ``m - n`` and dephasing only rescales each such
diagonal), so dephasing is applied exactly and loss is integrated with
fixed-step RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .records import RunRecord, observables_row

RK4_STEP_BOUND = 0.05      # h * ||L_loss|| per substep
MAX_SUBSTEPS = 200_000


class SubstepLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    kappa: float = 0.0
    kappa_phi: float = 0.0
    dt: float = 1.0

    def __post_init__(self):
        for name in ("kappa", "kappa_phi", "dt"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"NoiseSpec.{name} must be finite and non-negative, got {v}")
        if self.dt <= 0:
            raise ValueError(f"NoiseSpec.dt must be positive, got {self.dt}")

    @property
    def is_trivial(self) -> bool:
        return self.kappa == 0 and self.kappa_phi == 0


def _loss_rhs(rho: np.ndarray, sq: np.ndarray, half_n_sum: np.ndarray) -> np.ndarray:
    out = -half_n_sum * rho
    # (a rho a†)_{ij} = sqrt(i+1) sqrt(j+1) rho_{i+1, j+1}
    out[:-1, :-1] += sq * rho[1:, 1:]
    return out


def lindblad_idle(rho, spec: NoiseSpec, osc=None) -> np.ndarray:
    rho = np.array(rho, dtype=complex)
    dim = rho.shape[0]
    if spec.is_trivial:
        return rho
    idx = np.arange(dim)
    if spec.kappa_phi:
        diff = idx[:, None] - idx[None, :]
        rho *= np.exp(-0.5 * spec.kappa_phi * spec.dt * diff**2)
    if spec.kappa:
        norm_bound = 2 * spec.kappa * max(dim - 1, 1)
        steps = max(1, math.ceil(spec.dt * norm_bound / RK4_STEP_BOUND))
        if steps > MAX_SUBSTEPS:
            raise SubstepLimitError(
                f"kappa*dt = {spec.kappa * spec.dt:.3g} needs {steps} RK4 substeps at cutoff {dim}"
            )
        h = spec.dt / steps
        sq = spec.kappa * np.sqrt(np.outer(idx[1:], idx[1:]))
        half = 0.5 * spec.kappa * (idx[:, None] + idx[None, :])
        for _ in range(steps):
            k1 = _loss_rhs(rho, sq, half)
            k2 = _loss_rhs(rho + 0.5 * h * k1, sq, half)
            k3 = _loss_rhs(rho + 0.5 * h * k2, sq, half)
            k4 = _loss_rhs(rho + h * k3, sq, half)
            rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return (rho + rho.conj().T) / 2


def free_decay_baseline(init, spec: NoiseSpec, total_steps: int, osc=None) -> RunRecord:
    """Unstabilized idle evolution sampled once per ``dt`` (one step per CD slot)."""
    from .gkp import stabilizers

    rho = np.array(init, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    stabs = stabilizers(rho.shape[0])
    rows = [observables_row(0, rho, stabs)]
    for k in range(1, total_steps + 1):
        rho = lindblad_idle(rho, spec)
        rows.append(observables_row(k, rho, stabs))
    return RunRecord(rows=rows, meta={"protocol": "free", "noise": vars(spec).copy()})
