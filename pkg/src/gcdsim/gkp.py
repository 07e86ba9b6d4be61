"""GKP stabilization by phase estimation with qubit and d=4 qudit ancillas."""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gcd import contract_ancilla, generalized_cd
from .linalg import trace_norm
from .oscillator import CutoffError, FockSpace, coherent_state, displacement, fock_state, top_population
from .qudit import quadrature_state
from .records import RunRecord, observables_row

GRID = math.sqrt(2 * math.pi)          # stabilizer displacement length l
BETA_STAB = GRID / 2                   # sqrt(pi/2)
DEFAULT_EPSILON = 0.1 / math.sqrt(2)


def stabilizers(osc) -> dict[str, np.ndarray]:
    return {"S_X": displacement(GRID, osc), "S_Z": displacement(1j * GRID, osc)}


def qubit_pe_kraus(alpha: complex, sign: int, osc) -> np.ndarray:
    """``M_±(alpha) = (e^{±iπ/4} D(alpha) + e^{∓iπ/4} D(-alpha)) / 2``."""
    ph = cmath.exp(sign * 1j * math.pi / 4)
    return (ph * displacement(alpha, osc) + ph.conjugate() * displacement(-alpha, osc)) / 2


def qubit_pe_kraus_contracted(alpha: complex, sign: int, osc) -> np.ndarray:
    """``<+| exp(±iπ/4 Z) CD_2(alpha) |+>`` by explicit ancilla contraction."""
    n = osc.cutoff if hasattr(osc, "cutoff") else int(osc)
    plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    rot = np.diag([cmath.exp(sign * 1j * math.pi / 4), cmath.exp(-sign * 1j * math.pi / 4)])
    op = np.kron(rot, np.eye(n)) @ generalized_cd(2, alpha, n)
    return contract_ancilla(op, plus, plus, n)


def qudit_basis(beta: float) -> np.ndarray:
    """Columns are ``|j> = (1/2) Σ_s exp(i(β² cos πs + (π/2) cos((s+j)π/2))) |s>``."""
    s = np.arange(4)
    cols = [
        0.5 * np.exp(1j * (beta**2 * np.cos(np.pi * s) + np.pi / 2 * np.cos((s + j) * np.pi / 2)))
        for j in range(4)
    ]
    return np.stack(cols, axis=1)


QUDIT_OBSERVABLE = 0.5 * np.array([
    [3, 2j, 1, 0],
    [-2j, 3, 0, -1],
    [1, 0, 3, -2j],
    [0, -1, 2j, 3],
])


def qudit_measurement_basis(beta: float) -> dict[str, np.ndarray]:
    return {"vectors": qudit_basis(beta), "observable": QUDIT_OBSERVABLE.copy()}


def qudit_pe_kraus(beta: float, j: int, osc) -> np.ndarray:
    """``M_j(β) = <j| CD_4(e^{iπ/4} √2 β) |m=0>`` by ancilla contraction."""
    n = osc.cutoff if hasattr(osc, "cutoff") else int(osc)
    cd = generalized_cd(4, cmath.exp(1j * math.pi / 4) * math.sqrt(2) * beta, n)
    return contract_ancilla(cd, qudit_basis(beta)[:, j], quadrature_state(4, "m", 0), n)


def qudit_pe_kraus_closed(beta: float, j: int, osc) -> np.ndarray:
    """Four-term closed form of ``M_j(β)``."""
    out = 0
    for s in range(4):
        ph = cmath.exp(-0.5j * math.pi * math.cos(math.pi / 2 * (s + j))) * cmath.exp(
            -((-1) ** s) * 1j * beta**2
        )
        out = out + ph * displacement(
            math.sqrt(2) * cmath.exp(1j * math.pi / 4 * (2 * s + 1)) * beta, osc
        )
    return out / 4


# ---------------------------------------------------------------------------
# Sharpen-trim protocol
# ---------------------------------------------------------------------------

# Outcome j of a qudit step is corrected by D(c * exp(-iπ/4 (2 P[j] + 1))).
# Since P[j] = j + 2 mod 4 this equals D(-c * exp(-iπ/4 (2j + 1))). The tables
# were found by exhaustive search over both 4! choices (``search_qudit_pairing``).
QUDIT_SHARPEN_PAIRING = (2, 3, 0, 1)
QUDIT_TRIM_PAIRING = (2, 3, 0, 1)

# Qubit step k with outcome s = ±1 is corrected by D(QUBIT_SIGNS[k] * s * c_k).
QUBIT_STEP_NAMES = ("sharpen_q", "trim_q", "sharpen_p", "trim_p")
QUBIT_SIGNS = (1, 1, -1, -1)

DEFAULT_ABORT_POP = 1e-2


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GkpConstants:
    epsilon: float = DEFAULT_EPSILON

    @property
    def grid(self) -> float:
        return GRID

    @property
    def beta(self) -> float:
        return BETA_STAB


@dataclass(frozen=True)
class ProtocolSpec:
    kind: str = "qudit4"               # "qubit" or "qudit4"
    rounds: int = 10
    epsilon: float | None = None       # overrides GkpConstants.epsilon when set
    noise: object = None               # NoiseSpec or None
    mode: str = "channel"              # "channel" or "trajectory"
    seed: int | None = None
    abort_population: float = DEFAULT_ABORT_POP

    def __post_init__(self):
        if self.kind not in ("qubit", "qudit4"):
            raise ValueError(f"unknown protocol kind {self.kind!r}; expected 'qubit' or 'qudit4'")
        if self.mode not in ("channel", "trajectory"):
            raise ValueError(f"unknown mode {self.mode!r}; expected 'channel' or 'trajectory'")
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")

    @property
    def cds_per_round(self) -> int:
        return 4 if self.kind == "qubit" else 2


def _eps(spec: ProtocolSpec, consts: GkpConstants) -> float:
    return consts.epsilon if spec.epsilon is None else spec.epsilon


def _qudit_phase(k: int) -> complex:
    return cmath.exp(-1j * math.pi / 4 * (2 * k + 1))


def qudit_step(beta: float, shift_len: float, pairing, osc) -> list[np.ndarray]:
    """Corrected Kraus operators ``D(c_j) M_j(β)`` of one qudit phase estimation."""
    return [
        displacement(shift_len * _qudit_phase(pairing[j]), osc) @ qudit_pe_kraus(beta, j, osc)
        for j in range(4)
    ]


def qubit_step(alpha: complex, shift: complex, sign: int, osc) -> list[np.ndarray]:
    return [displacement(sign * s * shift, osc) @ qubit_pe_kraus(alpha, s, osc) for s in (1, -1)]


@lru_cache(maxsize=16)
def _protocol_steps(kind: str, eps: float, n: int, sharpen_pair=QUDIT_SHARPEN_PAIRING,
                    trim_pair=QUDIT_TRIM_PAIRING, qubit_signs=QUBIT_SIGNS):
    b = BETA_STAB
    if kind == "qudit4":
        return (
            qudit_step(b, eps / math.sqrt(2), sharpen_pair, n),
            qudit_step(eps / 2, GRID / math.sqrt(2), trim_pair, n),
        )
    layout = [(1j * b, eps / 2), (1j * eps / 2, b), (b, 1j * eps / 2), (eps / 2, 1j * b)]
    return tuple(qubit_step(a, c, sg, n) for (a, c), sg in zip(layout, qubit_signs))


def protocol_steps(spec: ProtocolSpec, consts: GkpConstants, osc) -> tuple[list[np.ndarray], ...]:
    """One round as a sequence of steps, each a list of corrected Kraus operators."""
    n = osc.cutoff if hasattr(osc, "cutoff") else int(osc)
    return _protocol_steps(spec.kind, float(_eps(spec, consts)), n)


def apply_channel(rho: np.ndarray, kraus) -> np.ndarray:
    return sum(k @ rho @ k.conj().T for k in kraus)


def _as_dm(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj()) if state.ndim == 1 else state


def _check_population(state, cd_count: int, limit: float) -> None:
    pop = top_population(state)
    if pop > limit:
        raise CutoffError(
            f"top-decile Fock population {pop:.3g} exceeds {limit:.3g} after CD {cd_count}"
        )


def _trajectory_step(state, kraus, rng):
    outs = [k @ state if state.ndim == 1 else k @ state @ k.conj().T for k in kraus]
    if state.ndim == 1:
        probs = np.array([np.vdot(o, o).real for o in outs])
    else:
        probs = np.array([np.trace(o).real for o in outs])
    probs = np.clip(probs, 0, None)
    idx = rng.choice(len(kraus), p=probs / probs.sum())
    out = outs[idx]
    return out / (np.sqrt(probs[idx]) if state.ndim == 1 else probs[idx]), int(idx)


def run_stabilization(spec: ProtocolSpec, consts: GkpConstants | None = None, osc=None,
                      init=None) -> RunRecord:
    """Run ``spec.rounds`` rounds and log the stabilizers after every CD.

    In channel mode all outcomes are kept (averaged dynamics). In trajectory
    mode one outcome per step is sampled with a seeded generator; noiseless
    pure-state trajectories are propagated as vectors.
    """
    from .noise import lindblad_idle

    consts = consts or GkpConstants()
    osc = osc if osc is not None else FockSpace(100)
    n = osc.cutoff if hasattr(osc, "cutoff") else int(osc)
    steps = protocol_steps(spec, consts, n)
    stabs = stabilizers(n)
    noisy = spec.noise is not None and not spec.noise.is_trivial

    if init is None:
        init = fock_state(0, n)
    state = np.asarray(init, dtype=complex)
    if spec.mode == "channel" or noisy:
        state = _as_dm(state)
    rng = np.random.default_rng(spec.seed)

    rows = [observables_row(0, state, stabs)]
    outcomes = []
    cd = 0
    for _ in range(spec.rounds):
        for kraus in steps:
            if spec.mode == "channel":
                state = apply_channel(state, kraus)
            else:
                state, idx = _trajectory_step(state, kraus, rng)
                outcomes.append(idx)
            if noisy:
                state = lindblad_idle(state, spec.noise)
            cd += 1
            _check_population(state, cd, spec.abort_population)
            rows.append(observables_row(cd, state, stabs))
    meta = {
        "protocol": spec.kind,
        "mode": spec.mode,
        "epsilon": _eps(spec, consts),
        "cutoff": n,
        "seed": spec.seed,
    }
    if outcomes:
        meta["outcomes"] = outcomes
    return RunRecord(rows=rows, meta=meta, state=state)


def round_map(spec: ProtocolSpec, consts: GkpConstants, osc):
    """The density-matrix map of one full round, noise included."""
    from .noise import lindblad_idle

    steps = protocol_steps(spec, consts, osc)
    noisy = spec.noise is not None and not spec.noise.is_trivial

    def phi(rho):
        for kraus in steps:
            rho = apply_channel(rho, kraus)
            if noisy:
                rho = lindblad_idle(rho, spec.noise)
        return rho

    return phi


def converged_gkp_state(spec: ProtocolSpec, consts: GkpConstants | None = None, osc=None,
                        tol: float = 1e-6, max_rounds: int = 200, method: str = "eigen",
                        warmup: int = 30) -> tuple[np.ndarray, dict]:
    """Fixed point of the round map, with ``||Φ(ρ) - ρ||_1 < tol``.

    ``method="iterate"`` repeats the round map. It is slow here because a
    logical coherence decays by only a fraction of a percent per round.
    ``method="eigen"`` warms up from vacuum and then solves ``Φ(ρ) = ρ`` as
    the eigenvector of the round map with eigenvalue closest to one.
    """
    from scipy.sparse.linalg import LinearOperator, eigs

    consts = consts or GkpConstants()
    osc = osc if osc is not None else FockSpace(100)
    n = osc.cutoff if hasattr(osc, "cutoff") else int(osc)
    phi = round_map(spec, consts, n)
    rho = np.zeros((n, n), complex)
    rho[0, 0] = 1
    info = {"method": method, "rounds": 0, "matvecs": 0}

    def residual(r):
        return trace_norm(phi(r) - r)

    if method == "iterate":
        for k in range(1, max_rounds + 1):
            new = phi(rho)
            res = trace_norm(new - rho)
            rho = new
            info["rounds"] = k
            if res < tol:
                info["residual"] = res
                return rho, info
        raise ConvergenceError(
            f"residual {res:.3g} still above {tol:g} after {max_rounds} rounds"
        )
    if method != "eigen":
        raise ValueError(f"unknown method {method!r}")

    for _ in range(warmup):
        rho = phi(rho)
    info["rounds"] = warmup

    def matvec(v):
        info["matvecs"] += 1
        return phi(v.reshape(n, n)).ravel()

    op = LinearOperator((n * n, n * n), matvec=matvec, dtype=complex)
    _, vecs = eigs(op, k=1, sigma=None, which="LM", v0=rho.ravel(), tol=1e-12,
                   maxiter=max_rounds * 10)
    cand = vecs[:, 0].reshape(n, n)
    cand = cand / np.trace(cand)
    cand = (cand + cand.conj().T) / 2
    res = residual(cand)
    info["residual"] = res
    if res >= tol:
        raise ConvergenceError(f"eigen solve left residual {res:.3g} >= {tol:g}")
    return cand, info


# ---------------------------------------------------------------------------
# Pairing searches and ordering checks
# ---------------------------------------------------------------------------

def _score(steps, n, rounds):
    stabs = stabilizers(n)
    rho = np.zeros((n, n), complex)
    rho[0, 0] = 1
    for _ in range(rounds):
        for kraus in steps:
            rho = apply_channel(rho, kraus)
    return float(np.real(np.trace(stabs["S_X"] @ rho) + np.trace(stabs["S_Z"] @ rho)))


def search_qudit_pairing(osc, epsilon: float = DEFAULT_EPSILON, rounds: int = 3):
    """Best (sharpen, trim) correction tables over all 4! x 4! choices."""
    n = osc.cutoff if hasattr(osc, "cutoff") else int(osc)
    perms = list(itertools.permutations(range(4)))
    sharpen = {p: qudit_step(BETA_STAB, epsilon / math.sqrt(2), p, n) for p in perms}
    trim = {p: qudit_step(epsilon / 2, GRID / math.sqrt(2), p, n) for p in perms}
    scored = [((_score((sharpen[a], trim[b]), n, rounds)), a, b) for a in perms for b in perms]
    best = max(scored)
    return best[1], best[2], best[0]


def search_qubit_signs(osc, epsilon: float = DEFAULT_EPSILON, rounds: int = 6):
    """Best per-step correction signs over all 2^4 choices.

    Fewer than five rounds from vacuum do not separate the trim-p sign.
    """
    n = osc.cutoff if hasattr(osc, "cutoff") else int(osc)
    scored = []
    for signs in itertools.product((1, -1), repeat=4):
        steps = _protocol_steps("qubit", float(epsilon), n, qubit_signs=signs)
        scored.append((_score(steps, n, rounds), signs))
    best = max(scored)
    return best[1], best[0]


def ordering_deviation(osc, epsilon: float = DEFAULT_EPSILON, low: int = 30) -> float:
    """Largest operator-norm gap between the two orderings of sharpen-p and trim-q.

    Compares ``M_s(iε/2) M_s'(β)`` against ``M_s'(β) M_s(iε/2)`` over all
    outcome pairs, restricted to inputs in the lowest ``low`` Fock levels so
    that truncation does not enter. The gap grows like ``l ε``.
    """
    n = osc.cutoff if hasattr(osc, "cutoff") else int(osc)
    worst = 0.0
    for s in (1, -1):
        trim = qubit_pe_kraus(1j * epsilon / 2, s, n)
        for t in (1, -1):
            sharpen = qubit_pe_kraus(BETA_STAB, t, n)
            gap = (trim @ sharpen - sharpen @ trim)[:, :low]
            worst = max(worst, float(np.linalg.norm(gap, 2)))
    return worst
