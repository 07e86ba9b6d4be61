"""Experiment config validation and dispatch.

A config is a YAML mapping::

    experiment: stabilize
    parameters:
      protocol: qudit4
      rounds: 10
    sweep:            # optional; cartesian product over the listed values
      epsilon: [0.0707, 0.0354]

Every parameter has a default; the resolved config records which values
were defaulted. ``sweep`` keys must be parameters of the chosen experiment.
"""

from __future__ import annotations

import difflib
import hashlib
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import gkp
from .encodings import DEFAULT_TARGET_ALPHA, encoding_cat_fidelity
from .gcd import CatSpec, cat_state, generate_cat_via_cd
from .linalg import fidelity
from .noise import NoiseSpec, free_decay_baseline
from .oscillator import coherent_state, fock_state, wigner
from .records import GridRecord, RunRecord

DEFAULT_NOISE_SWEEP = (0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2)

# Every convention a reader needs to trace a figure back to a choice.
DECISIONS = {
    "version": 1,
    "qudit_sharpen_pairing": list(gkp.QUDIT_SHARPEN_PAIRING),
    "qudit_trim_pairing": list(gkp.QUDIT_TRIM_PAIRING),
    "qudit_correction": "D(c exp(-i pi/4 (2 P[j] + 1)))",
    "qubit_step_order": list(gkp.QUBIT_STEP_NAMES),
    "qubit_correction_signs": list(gkp.QUBIT_SIGNS),
    "idle_insertion": "one idle block after every CD",
    "rotor_phase_op": "exp(i theta) |N> = |N-1>; outcome Fock index N - N'",
    "beam_splitter": "|a>|0> -> |a cos t>|a sin t>",
    "spin_coherent_phase": "exp(-i k phi)",
    "default_noise_sweep": list(DEFAULT_NOISE_SWEEP),
    "default_target_alpha": DEFAULT_TARGET_ALPHA,
}


def decision_hash() -> str:
    blob = json.dumps(DECISIONS, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Parameter schema
# ---------------------------------------------------------------------------

def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


@dataclass(frozen=True)
class Param:
    default: object
    kind: type
    rule: object = None          # predicate
    rule_text: str = ""
    choices: tuple = ()


def _p(default, kind, rule=None, text="", choices=()):
    return Param(default, kind, rule, text, choices)


COMMON = {
    "cutoff": _p(100, int, lambda v: v >= 2, "cutoff >= 2"),
    "seed": _p(None, int),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "cat-state": {
        "d": _p(4, int, lambda v: v >= 2, "d >= 2"),
        "alpha": _p(2.0, complex),
        "wigner_range": _p(5.0, float, _positive, "wigner_range > 0"),
        "wigner_points": _p(41, int, lambda v: v >= 2, "wigner_points >= 2"),
    },
    "stabilize": {
        "protocol": _p("qudit4", str, choices=("qudit4", "qubit")),
        "rounds": _p(10, int, _non_negative, "rounds >= 0"),
        "epsilon": _p(gkp.DEFAULT_EPSILON, float, _positive, "epsilon > 0"),
        "mode": _p("channel", str, choices=("channel", "trajectory")),
        "init": _p("vacuum", str, choices=("vacuum", "converged")),
        "kappa": _p(0.0, float, _non_negative, "kappa >= 0 (NoiseSpec rates are non-negative)"),
        "kappa_phi": _p(0.0, float, _non_negative, "kappa_phi >= 0 (NoiseSpec rates are non-negative)"),
        "dt": _p(1.0, float, _positive, "dt > 0"),
        "abort_population": _p(gkp.DEFAULT_ABORT_POP, float, _positive, "abort_population > 0"),
    },
    "noise-sweep": {
        "protocols": _p(["qudit4", "qubit"], list),
        "kappa_values": _p(list(DEFAULT_NOISE_SWEEP), list, lambda v: all(x >= 0 for x in v),
                           "kappa_values >= 0"),
        "kappa_phi_values": _p(list(DEFAULT_NOISE_SWEEP), list, lambda v: all(x >= 0 for x in v),
                               "kappa_phi_values >= 0"),
        "total_cds": _p(40, int, _positive, "total_cds > 0"),
        "epsilon": _p(gkp.DEFAULT_EPSILON, float, _positive, "epsilon > 0"),
        "dt": _p(1.0, float, _positive, "dt > 0"),
        "abort_population": _p(gkp.DEFAULT_ABORT_POP, float, _positive, "abort_population > 0"),
    },
    "encoding-fidelity": {
        "cutoff": _p(30, int, lambda v: v >= 2, "cutoff >= 2"),
        "backends": _p(None, list),
        "target_alpha": _p(DEFAULT_TARGET_ALPHA, float, _positive, "target_alpha > 0"),
        "d": _p(4, int, lambda v: v >= 2, "d >= 2"),
    },
    "wigner": {
        "state": _p("vacuum", str, choices=("vacuum", "coherent", "cat", "gkp")),
        "alpha": _p(2.0, complex),
        "d": _p(4, int, lambda v: v >= 2, "d >= 2"),
        "m": _p(0, int, _non_negative, "m >= 0"),
        "protocol": _p("qudit4", str, choices=("qudit4", "qubit")),
        "epsilon": _p(gkp.DEFAULT_EPSILON, float, _positive, "epsilon > 0"),
        "wigner_range": _p(5.0, float, _positive, "wigner_range > 0"),
        "wigner_points": _p(81, int, lambda v: v >= 2, "wigner_points >= 2"),
    },
}

FIG4_BACKENDS = [
    {"backend": "exact"},
    {"backend": "rotor", "n": 20, "sigma2": 4.0},
    {"backend": "rotor", "n": 30, "sigma2": 1.0},
    {"backend": "cat", "alpha": 3.0},
    {"backend": "cat", "alpha": 4.0},
    {"backend": "spin", "N": 19},
    {"backend": "spin", "N": 50},
]


def _suggest(key, options):
    close = difflib.get_close_matches(key, list(options), n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def _coerce(name: str, value, spec: Param):
    kind = spec.kind
    try:
        if kind is complex:
            if isinstance(value, str):
                value = complex(value.replace(" ", "").replace("i", "j"))
            value = complex(value)
            if value.imag == 0:
                value = value.real
        elif kind is float:
            if isinstance(value, bool):
                raise TypeError
            value = float(value)
        elif kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            value = int(value)
        elif kind is list:
            if not isinstance(value, list):
                raise TypeError
            value = [float(x) if isinstance(x, str) and _looks_numeric(x) else x for x in value]
        elif kind is str:
            if not isinstance(value, str):
                raise TypeError
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {name!r}: expected {kind.__name__}, got {value!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"parameter {name!r} must be finite")
    if spec.choices and value not in spec.choices:
        raise ConfigError(f"parameter {name!r} must be one of {list(spec.choices)}, got {value!r}")
    if spec.rule is not None and not spec.rule(value):
        raise ConfigError(f"parameter {name!r} = {value!r} violates: {spec.rule_text}")
    return value


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict
    defaulted: set = field(default_factory=set)
    sweep: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "experiment": self.experiment,
            "parameters": {
                k: {"value": _jsonable(v), "default": k in self.defaulted}
                for k, v in self.parameters.items()
            },
            "sweep": {k: [_jsonable(x) for x in v] for k, v in self.sweep.items()},
        }

    def points(self) -> list[dict]:
        if not self.sweep:
            return [dict(self.parameters)]
        keys = list(self.sweep)
        return [dict(self.parameters, **dict(zip(keys, combo)))
                for combo in itertools.product(*(self.sweep[k] for k in keys))]


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


def validate_config(raw: str | dict) -> ExperimentConfig:
    if isinstance(raw, str):
        try:
            data = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
            raise ConfigError(f"config parse error{where}: {getattr(exc, 'problem', exc)}") from None
    else:
        data = raw
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping with an 'experiment' key")
    for key in data:
        if key not in ("experiment", "parameters", "sweep"):
            raise ConfigError(f"unknown top-level key {key!r}"
                              + _suggest(key, ("experiment", "parameters", "sweep")))
    exp = data.get("experiment")
    if exp not in SCHEMAS:
        raise ConfigError(f"unknown experiment {exp!r}; choose from {sorted(SCHEMAS)}"
                          + (_suggest(str(exp), SCHEMAS) if exp else ""))
    schema = {**COMMON, **SCHEMAS[exp]}
    given = data.get("parameters") or {}
    if not isinstance(given, dict):
        raise ConfigError("'parameters' must be a mapping")
    for key in given:
        if key not in schema:
            raise ConfigError(f"unknown parameter {key!r} for {exp}" + _suggest(key, schema))
    params, defaulted = {}, set()
    for name, spec in schema.items():
        if name in given and given[name] is not None:
            params[name] = _coerce(name, given[name], spec)
        else:
            params[name] = spec.default
            defaulted.add(name)
    sweep = data.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise ConfigError("'sweep' must be a mapping of parameter -> list")
    resolved_sweep = {}
    for key, values in sweep.items():
        if key not in schema:
            raise ConfigError(f"unknown sweep parameter {key!r}" + _suggest(key, schema))
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep {key!r} must be a non-empty list")
        resolved_sweep[key] = [_coerce(key, v, schema[key]) for v in values]
    cfg = ExperimentConfig(exp, params, defaulted, resolved_sweep)
    if exp == "noise-sweep":
        bad = [k for k in params["protocols"] if k not in ("qudit4", "qubit")]
        if bad or not params["protocols"]:
            raise ConfigError(f"parameter 'protocols' must list 'qudit4' and/or 'qubit', got {bad}")
    if exp == "encoding-fidelity" and params["backends"] is not None:
        for entry in params["backends"]:
            if not isinstance(entry, dict) or "backend" not in entry:
                raise ConfigError("each backends entry needs a 'backend' key")
    return cfg


# ---------------------------------------------------------------------------
# Runners: each returns (primary RunRecord, {extra_name: RunRecord})
# ---------------------------------------------------------------------------

def _grid(p):
    axis = np.linspace(-p["wigner_range"], p["wigner_range"], p["wigner_points"])
    return axis, axis


def _wigner_record(state, p) -> RunRecord:
    q, pp = _grid(p)
    return GridRecord(q, pp, wigner(state, q, pp))


def run_cat_state(p) -> tuple[RunRecord, dict]:
    outcomes = generate_cat_via_cd(p["d"], p["alpha"], p["cutoff"])
    rows, extras = [], {}
    for o in outcomes:
        m = o["m"]
        if o["post_state"] is None:
            fid = float("nan")
        else:
            ref = cat_state(CatSpec(p["d"], m, p["alpha"]), p["cutoff"])[0]
            fid = fidelity(o["post_state"], ref)
            extras[f"wigner_m{m}"] = _wigner_record(o["post_state"], p)
        rows.append({"m": m, "probability": o["probability"],
                     "probability_closed_form": o["probability_closed_form"], "fidelity": fid})
    return RunRecord(rows=rows), extras


def _protocol_spec(p, kind=None, rounds=None, noise=None, seed=None):
    return gkp.ProtocolSpec(
        kind=kind or p["protocol"], rounds=p.get("rounds", 0) if rounds is None else rounds,
        epsilon=p["epsilon"], noise=noise, mode=p.get("mode", "channel"), seed=seed,
        abort_population=p["abort_population"],
    )


def run_stabilize(p) -> tuple[RunRecord, dict]:
    noise = NoiseSpec(p["kappa"], p["kappa_phi"], p["dt"])
    spec = _protocol_spec(p, noise=noise, seed=p["seed"])
    init = None
    if p["init"] == "converged":
        init, _ = gkp.converged_gkp_state(gkp.ProtocolSpec(spec.kind, epsilon=spec.epsilon),
                                          osc=p["cutoff"])
    rec = gkp.run_stabilization(spec, osc=p["cutoff"], init=init)
    return RunRecord(rows=rec.rows), {}


def run_noise_sweep(p, threads: int = 1) -> tuple[RunRecord, dict]:
    n = p["cutoff"]
    starts = {k: gkp.converged_gkp_state(gkp.ProtocolSpec(k, epsilon=p["epsilon"]), osc=n)[0]
              for k in p["protocols"]}
    jobs = []
    for channel, values in (("loss", p["kappa_values"]), ("dephasing", p["kappa_phi_values"])):
        for v in values:
            noise = NoiseSpec(v, 0.0, p["dt"]) if channel == "loss" else NoiseSpec(0.0, v, p["dt"])
            for kind in p["protocols"]:
                jobs.append((channel, v, kind, noise))
            jobs.append((channel, v, "free", noise))

    def run(job):
        channel, v, kind, noise = job
        if kind == "free":
            rows = []
            for k, start in starts.items():
                rec = free_decay_baseline(start, noise, p["total_cds"])
                rows.extend(dict(r, start=k) for r in rec.rows)
            return rows
        cds = gkp.ProtocolSpec(kind).cds_per_round
        spec = _protocol_spec(p, kind=kind, rounds=p["total_cds"] // cds, noise=noise)
        rec = gkp.run_stabilization(spec, osc=n, init=starts[kind])
        return [dict(r, start=kind) for r in rec.rows]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(run, jobs))
    rows = []
    for sweep_id, (job, res) in enumerate(zip(jobs, results)):
        channel, v, kind, noise = job
        for r in res:
            rows.append({"sweep_id": sweep_id, "channel": channel, "protocol": kind,
                         "start": r.pop("start"), "kappa": noise.kappa,
                         "kappa_phi": noise.kappa_phi, "elapsed": r["cd_count"] * noise.dt, **r})
    return RunRecord(rows=rows), {}


def run_encoding_fidelity(p, threads: int = 1) -> tuple[RunRecord, dict]:
    backends = p["backends"] or FIG4_BACKENDS

    def run(entry):
        entry = dict(entry)
        name = entry.pop("backend")
        return encoding_cat_fidelity(name, entry, d=p["d"], target_alpha=p["target_alpha"],
                                     cutoff=p["cutoff"])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(run, backends))
    rows = []
    for idx, res in enumerate(results):
        label = ",".join(f"{k}={v}" for k, v in sorted(res["params"].items()))
        for r in res["rows"]:
            rows.append({"sweep_id": idx, "backend": res["backend"], "param_set": label,
                         "captured": res["captured"], **r})
    return RunRecord(rows=rows), {}


def run_wigner(p) -> tuple[GridRecord, dict]:
    n = p["cutoff"]
    if p["state"] == "vacuum":
        state = fock_state(0, n)
    elif p["state"] == "coherent":
        state = coherent_state(p["alpha"], n)
    elif p["state"] == "cat":
        state = cat_state(CatSpec(p["d"], p["m"], p["alpha"]), n)[0]
    else:
        state, _ = gkp.converged_gkp_state(gkp.ProtocolSpec(p["protocol"], epsilon=p["epsilon"]),
                                           osc=n)
    return _wigner_record(state, p), {}


RUNNERS = {
    "cat-state": run_cat_state,
    "stabilize": run_stabilize,
    "noise-sweep": run_noise_sweep,
    "encoding-fidelity": run_encoding_fidelity,
    "wigner": run_wigner,
}

DESCRIPTIONS = {
    "cat-state": "d-legged cat generation by CD_d and ancilla measurement, with Wigner grids",
    "stabilize": "GKP sharpen-trim stabilization, stabilizers after every CD",
    "noise-sweep": "stabilized vs free decay from the converged GKP state under loss or dephasing",
    "encoding-fidelity": "cat fidelity with each finite-ancilla implementation of CD_4",
    "wigner": "Wigner function of a vacuum, coherent, cat or converged GKP state",
}


def run_point(experiment: str, params: dict, threads: int = 1):
    fn = RUNNERS[experiment]
    if experiment in ("noise-sweep", "encoding-fidelity"):
        return fn(params, threads=threads)
    return fn(params)


def run_config(cfg: ExperimentConfig, threads: int = 1, seed: int | None = None):
    """All sweep points, in parallel, merged with a ``sweep_id`` column when swept."""
    points = cfg.points()
    base = seed if seed is not None else cfg.parameters.get("seed")
    for i, pt in enumerate(points):
        if base is not None:
            pt["seed"] = base + i
    if len(points) == 1:
        return run_point(cfg.experiment, points[0], threads)
    keys = list(cfg.sweep)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda pt: run_point(cfg.experiment, pt), points))
    rows, extras = [], {}
    for i, (pt, (rec, ex)) in enumerate(zip(points, results)):
        if isinstance(rec, GridRecord):
            extras[f"p{i}"] = rec
            rows.append({"point_id": i, **{k: pt[k] for k in keys}})
            continue
        for r in rec.rows:
            rows.append({"point_id": i, **{k: pt[k] for k in keys}, **r})
        for name, e in ex.items():
            extras[f"{name}_p{i}"] = e
    return RunRecord(rows=rows), extras
