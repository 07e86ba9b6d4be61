"""Physical stand-ins for the generalized CD and their cat-state benchmark.

Three ancillas approximate ``CD_d``: a planar rotor through ``D(α e^{iθ̂})``,
a second oscillator through a beam splitter, and a collective spin through
the Tavis-Cummings exchange. Each scattering matrix conserves an excitation
count, so it is exponentiated block by block.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .gcd import CatSpec, cat_state, generalized_cd
from .linalg import expm_blocks, fidelity, normalize
from .oscillator import CutoffWarning, destroy, fock_state, top_population
from .qudit import quadrature_state

ENVELOPE_LEAK = 1e-8
DEFAULT_TARGET_ALPHA = 2.0


def _n(osc) -> int:
    return osc.cutoff if hasattr(osc, "cutoff") else int(osc)


# ---------------------------------------------------------------------------
# Planar rotor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotorSpace:
    K: int = 30

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("RotorSpace needs K >= 1")

    @property
    def dim(self) -> int:
        return 2 * self.K + 1

    @property
    def levels(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def index(self, level: int) -> int:
        if abs(level) > self.K:
            raise IndexError(f"level {level} outside [-{self.K}, {self.K}]")
        return level + self.K


@dataclass(frozen=True)
class RotorGkpSpec:
    d: int = 4
    s: int = 0
    n: int = 20
    sigma2: float = 4.0

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")


def rotor_phase_op(rotor: RotorSpace) -> np.ndarray:
    """Truncated ``e^{iθ̂}``: ``|N> -> |N-1>``, with the bottom level sent to zero."""
    return np.eye(rotor.dim, k=1, dtype=complex)


def rotor_operators(rotor: RotorSpace) -> dict[str, np.ndarray]:
    e = rotor_phase_op(rotor)
    return {"N": np.diag(rotor.levels).astype(complex), "exp_i_theta": e, "X_rot": e.conj().T}


def _rotor_generator(alpha, rotor, n):
    e = rotor_phase_op(rotor)
    a = destroy(n)
    return alpha * np.kron(e, a.conj().T) - np.conj(alpha) * np.kron(e.conj().T, a)


def _rotor_charges(rotor, n):
    return (rotor.levels[:, None] + np.arange(n)[None, :]).ravel()


def rotor_cd(alpha: complex, rotor: RotorSpace, osc) -> np.ndarray:
    """``exp(α e^{iθ̂} ⊗ a† - α* e^{-iθ̂} ⊗ a)`` on ``[2K+1, n]``.

    Conserves ``N + a†a``. The truncated phase operator is not unitary at the
    bottom rotor level, so unitarity only holds away from that edge.
    """
    n = _n(osc)
    return expm_blocks(_rotor_generator(alpha, rotor, n), _rotor_charges(rotor, n))


def rotor_gkp_state(spec: RotorGkpSpec, rotor: RotorSpace) -> np.ndarray:
    """``Σ_N exp(-(N-n)²/4σ²) exp(i 2π s N / d) |N>``, normalized on the truncation."""
    lv = rotor.levels
    env = np.exp(-((lv - spec.n) ** 2) / (4 * spec.sigma2))
    _check_envelope(env, rotor)
    psi = env * np.exp(2j * np.pi * spec.s * lv / spec.d)
    return normalize(psi)


def rotor_logical_m(spec: RotorGkpSpec, m: int, rotor: RotorSpace) -> np.ndarray:
    """``Σ_s ω^{sm} |s>_L``, supported on levels ``N ≡ -m (mod d)``."""
    lv = rotor.levels
    env = np.exp(-((lv - spec.n) ** 2) / (4 * spec.sigma2))
    _check_envelope(env, rotor)
    return normalize(env * ((lv + m) % spec.d == 0))


def _check_envelope(env, rotor):
    pop = env**2 / np.sum(env**2)
    edge = max(1, rotor.dim // 20)
    leak = pop[:edge].sum() + pop[-edge:].sum()
    if leak > ENVELOPE_LEAK:
        raise ValueError(f"rotor envelope leaks {leak:.3g} into the truncation edge (K={rotor.K})")


# ---------------------------------------------------------------------------
# Cat-code ancilla and beam splitter
# ---------------------------------------------------------------------------

def beam_splitter(theta: complex, ancilla_osc, target_osc) -> np.ndarray:
    """``exp(θ a' a† - θ* a'† a)`` on ``[ancilla, target]``; ``a'`` is the ancilla mode.

    For real θ, ``|α> ⊗ |0>`` goes to ``|α cos θ> ⊗ |α sin θ>``.
    """
    na, nt = _n(ancilla_osc), _n(target_osc)
    ap, a = destroy(na), destroy(nt)
    gen = theta * np.kron(ap, a.conj().T) - np.conj(theta) * np.kron(ap.conj().T, a)
    charges = (np.arange(na)[:, None] + np.arange(nt)[None, :]).ravel()
    return expm_blocks(gen, charges)


# ---------------------------------------------------------------------------
# Collective spin and Tavis-Cummings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinSpace:
    """``N`` two-level systems in the symmetric sector, spin ``j = N/2``.

    Basis index ``k`` counts lowering steps from the top: ``|j, m = j - k>``.
    """

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"SpinSpace.N must be a positive integer, got {self.N}")

    @classmethod
    def from_spin(cls, j: float) -> "SpinSpace":
        two_j = 2 * j
        if abs(two_j - round(two_j)) > 1e-12:
            raise ValueError(f"spin {j} is not a multiple of 1/2")
        return cls(int(round(two_j)))

    @property
    def j(self) -> float:
        return self.N / 2

    @property
    def dim(self) -> int:
        return self.N + 1


def spin_operators(spin: SpinSpace) -> dict[str, np.ndarray]:
    j = spin.j
    mz = j - np.arange(spin.dim)
    # S_- |j, m> = sqrt(j(j+1) - m(m-1)) |j, m-1>, i.e. index k -> k+1
    lower = np.sqrt(j * (j + 1) - mz[:-1] * (mz[:-1] - 1))
    s_minus = np.diag(lower, k=-1).astype(complex)
    return {"S_plus": s_minus.conj().T, "S_minus": s_minus, "S_z": np.diag(mz).astype(complex)}


def spin_coherent(spin: SpinSpace, theta: float, phi: float) -> np.ndarray:
    """Rotated top state with amplitudes ``√C(N,k) cos^{N-k}(θ/2) sin^k(θ/2) e^{-ikφ}``.

    With this phase the expectation of ``S_-`` carries phase ``+φ``.
    """
    k = np.arange(spin.dim)
    N = spin.N
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    log_mag = 0.5 * (gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1))
    log_mag = log_mag + xlogy(N - k, abs(c)) + xlogy(k, abs(s))
    mag = np.exp(log_mag) * np.sign(c) ** (N - k) * np.sign(s) ** k
    return mag * np.exp(-1j * k * phi)


def spin_logical_s(spin: SpinSpace, s: int, d: int = 4) -> np.ndarray:
    return spin_coherent(spin, math.pi / 2, 2 * math.pi * s / d)


def _tc_generator(alpha, spin, n):
    ops = spin_operators(spin)
    a = destroy(n)
    return alpha * np.kron(ops["S_minus"], a.conj().T) - np.conj(alpha) * np.kron(ops["S_plus"], a)


def tavis_cummings_cd(alpha: complex, spin: SpinSpace, osc) -> np.ndarray:
    """``exp(α S_- a† - α* S_+ a)`` on ``[N+1, n]``; approximates ``CD_d(α N / 2)``."""
    n = _n(osc)
    if abs(alpha * spin.N / 2) ** 2 > n / 4:
        warnings.warn(f"|α N/2|^2 = {abs(alpha * spin.N / 2) ** 2:.3g} is large for cutoff {n}",
                      CutoffWarning, stacklevel=2)
    charges = (np.arange(spin.dim)[:, None] - np.arange(n)[None, :]).ravel()
    return expm_blocks(_tc_generator(alpha, spin, n), charges)


def tc_trace_distance(alpha_eff: complex, spin: SpinSpace, osc, s: int = 0, d: int = 4) -> float:
    """Trace distance between ``TC |s>_L|0>`` and ``CD_d(α_eff)``'s ``|s>_L |α_eff ω^s>``."""
    from .oscillator import coherent_state

    n = _n(osc)
    u = tavis_cummings_cd(2 * alpha_eff / spin.N, spin, n)
    ls = spin_logical_s(spin, s, d)
    out = u @ np.kron(ls, fock_state(0, n))
    ideal = np.kron(ls, coherent_state(alpha_eff * np.exp(2j * np.pi * s / d), n))
    return math.sqrt(max(0.0, 1 - abs(np.vdot(ideal, out)) ** 2))


# ---------------------------------------------------------------------------
# Cat-generation benchmark
# ---------------------------------------------------------------------------

def _fourier_combine(states, m, d):
    omega = np.exp(2j * np.pi / d)
    return normalize(sum(omega ** (s * m) * states[s] for s in range(d)))


def _backend_run(backend: str, params: dict, d: int, target_alpha: float, n: int):
    """Returns (unitary, ancilla |m=0>, list of ancilla |m> vectors, metadata)."""
    if backend == "exact":
        u = generalized_cd(d, target_alpha, n)
        ms = [quadrature_state(d, "m", m) for m in range(d)]
        return u, ms[0], ms, {}
    if backend == "rotor":
        spec = RotorGkpSpec(d=d, n=int(params.get("n", 20)), sigma2=float(params.get("sigma2", 4.0)))
        K = int(params.get("K", 0)) or _rotor_default_K(spec, n)
        rotor = RotorSpace(K)
        u = rotor_cd(target_alpha, rotor, n)
        ms = [rotor_logical_m(spec, m, rotor) for m in range(d)]
        return u, ms[0], ms, {"K": K, "n": spec.n, "sigma2": spec.sigma2}
    if backend == "cat":
        amp = float(params.get("alpha", 3.0))
        na = int(params.get("ancilla_cutoff", 0)) or int(math.ceil(2 * amp**2 + 8 * amp + 20))
        theta = target_alpha / amp
        u = beam_splitter(theta, na, n)
        prep = cat_state(CatSpec(d, 0, amp), na)[0]
        residual = amp * math.cos(theta)
        ms = [cat_state(CatSpec(d, (-m) % d, residual), na)[0] for m in range(d)]
        return u, prep, ms, {"alpha": amp, "theta": theta, "ancilla_cutoff": na}
    if backend == "spin":
        spin = SpinSpace(int(params.get("N", 50)))
        u = tavis_cummings_cd(2 * target_alpha / spin.N, spin, n)
        logical = [spin_logical_s(spin, s, d) for s in range(d)]
        ms = [_fourier_combine(logical, m, d) for m in range(d)]
        return u, ms[0], ms, {"N": spin.N, "j": spin.j}
    raise ValueError(f"unknown backend {backend!r}; expected exact, rotor, cat or spin")


def _rotor_default_K(spec: RotorGkpSpec, n: int) -> int:
    width = math.ceil(8 * math.sqrt(spec.sigma2)) + 2
    return max(spec.n + width, n - spec.n + width)


def encoding_cat_fidelity(backend: str, params: dict | None = None, d: int = 4,
                          target_alpha: float = DEFAULT_TARGET_ALPHA, cutoff: int = 30) -> dict:
    """Cat generation with a backend CD in place of the exact ``CD_d``.

    The ancilla starts in the backend's ``|m=0>``, the coupling acts on
    ``|m=0> ⊗ |0>``, and the ancilla is projected on each backend ``|m>``.
    Each branch is compared with the exact ``|C_d^m(target_alpha)>``. The
    rotor projectors do not resolve the identity, so ``captured`` reports the
    total probability they account for.
    """
    params = dict(params or {})
    u, prep, ms, meta = _backend_run(backend, params, d, target_alpha, cutoff)
    psi = u @ np.kron(prep, fock_state(0, cutoff))
    psi = psi.reshape(len(prep), cutoff)
    rows = []
    for m, vec in enumerate(ms):
        branch = vec.conj() @ psi
        prob = float(np.vdot(branch, branch).real)
        target = cat_state(CatSpec(d, m, target_alpha), cutoff)[0]
        fid = fidelity(branch / math.sqrt(prob), target) if prob > 1e-14 else float("nan")
        rows.append({"m": m, "probability": prob, "fidelity": fid})
    return {
        "backend": backend,
        "params": {**params, **meta},
        "target_alpha": target_alpha,
        "rows": rows,
        "captured": sum(r["probability"] for r in rows),
        "top_population": top_population(np.linalg.norm(psi, axis=0)),
    }
