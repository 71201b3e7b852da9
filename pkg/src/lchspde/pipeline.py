"""End-to-end runs: discretize, compress, build the coefficient oracle,
execute the LCHS circuit and compare against classical engines."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .circuit import Circuit, box_state_prep, coefficient_oracle, lchs_program, run_lchs_snapshots
from .config import DENSE_CAP_QUBITS, ConfigError, RunConfig
from .discretize import (
    Family,
    PdeProblem,
    assemble,
    coefficient_operators,
    decode_field,
    encode_initial_state,
    positive_shift,
    term_counts,
)
from .mps import CoefficientTrain, build_coefficient_train
from .qubit_op import QubitOperator
from .reference import classical_fdm, norm_trace

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``cause`` keeps the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class Prepared:
    problem: PdeProblem
    ops: dict
    a: QubitOperator  # shifted so its Hermitian part is PSD
    shift: float
    w0: np.ndarray
    prep: Circuit | None
    counts: dict  # coefficient name -> (naive, minimized)


@dataclass
class Snapshot:
    time: float
    state: np.ndarray  # recovered w(t)
    success_probability: float


@dataclass
class SimulationResult:
    prepared: Prepared
    coef: CoefficientTrain
    snapshots: list
    gate_counts: dict = field(default_factory=dict)


def _stage(name: str):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (StageError, ConfigError):
                raise
            except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
                raise StageError(name, exc) from exc

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


def step_counts(times: Sequence[float], tau: float) -> list[int]:
    return [int(round(t / tau)) for t in times]


@_stage("discretize")
def prepare(cfg: RunConfig) -> Prepared:
    p = cfg.problem
    ops = coefficient_operators(p)
    counts = term_counts(p, ops)
    a, shift = positive_shift(assemble(p, ops))
    w0, norm0 = encode_initial_state(p, cfg.initial.u0, cfg.initial.udot0)
    if norm0 == 0:
        raise ValueError("initial data is identically zero")
    prep = None
    if cfg.initial.box is not None:
        nb = p.grid.nbits
        prep = box_state_prep(cfg.initial.box, nb, 0, p.layout.block_qubits)
        made = prep.run()
        if not np.allclose(made, w0 / norm0, atol=1e-12):
            raise ConfigError("initial: prep 'box' does not reproduce the normalized initial state")
    return Prepared(p, ops, a, shift, w0, prep, counts)


@_stage("coefficient oracle")
def coefficient_train(cfg: RunConfig) -> CoefficientTrain:
    s = cfg.lchs
    return build_coefficient_train(s.n_anc, s.n_frac, s.r_psi, s.r_phi, s.tol, sweeps=s.sweeps)


@_stage("lchs")
def _run(prepared: Prepared, coef: CoefficientTrain, cfg: RunConfig, times: Sequence[float]) -> list[Snapshot]:
    s, p = cfg.lchs, prepared.problem
    res = run_lchs_snapshots(
        prepared.a,
        coef.phi,
        prepared.w0,
        s.n_anc,
        s.n_frac,
        p.tau,
        step_counts(times, p.tau),
        prep=prepared.prep,
        order=s.order,
        layers=s.layers,
        shift=prepared.shift,
        max_dt=s.max_dt,
    )
    return [Snapshot(float(t), r.solution, r.success_probability) for t, r in zip(times, res)]


def simulate(cfg: RunConfig, prepared: Prepared | None = None, coef: CoefficientTrain | None = None) -> SimulationResult:
    prepared = prepare(cfg) if prepared is None else prepared
    coef = coefficient_train(cfg) if coef is None else coef
    snaps = _run(prepared, coef, cfg, cfg.outputs.times)
    s = cfg.lchs
    prog = lchs_program(prepared.a, coef.phi, s.n_anc, s.n_frac, prepared.problem.tau, prepared.prep, s.order, s.layers, s.max_dt)
    counts = prog.circuit(prepared.problem.steps).counts()
    return SimulationResult(prepared, coef, snaps, counts)


def decode(state: np.ndarray, p: PdeProblem, name: str) -> np.ndarray:
    """Named node field from a state: ``u``, ``udot``, ``gradN`` or ``raw``."""
    if name.startswith("grad"):
        return decode_field(state, p, "grad", int(name[4:]))
    return decode_field(state, p, name)


def primary_field(p: PdeProblem) -> str:
    """The field every engine can produce: ``u`` for first order, ``udot`` for second."""
    return "u" if p.family is Family.FIRST_ORDER else "udot"


# --- classical engines --------------------------------------------------------


@_stage("dense reference")
def dense_states(prepared: Prepared, times: Sequence[float]) -> list[np.ndarray]:
    a = prepared.a
    if a.n_qubits > DENSE_CAP_QUBITS:
        raise ValueError(f"dense cap: {a.n_qubits} qubits > {DENSE_CAP_QUBITS}")
    m = a.dense()
    out = []
    for t in times:
        out.append(math.exp(prepared.shift * t) * (scipy.linalg.expm(-t * m) @ prepared.w0))
    return out


@_stage("fdm")
def fdm_fields(cfg: RunConfig, times: Sequence[float]) -> list[np.ndarray]:
    """Primary field from explicit finite differences at ``times``."""
    p = cfg.problem
    dt = cfg.validation.fdm_dt or p.tau
    ts = classical_fdm(p, cfg.initial.u0, cfg.initial.udot0, times, dt)
    if p.family is Family.FIRST_ORDER:
        return [np.asarray(s, dtype=float) for s in ts.states]
    return [np.asarray(r, dtype=float) for r in ts.rates]


def relative_error(x: np.ndarray, ref: np.ndarray) -> float:
    n = float(np.linalg.norm(ref))
    d = float(np.linalg.norm(np.asarray(x) - np.asarray(ref)))
    return d / n if n > 0 else d


def validate(cfg: RunConfig) -> dict:
    """Three-engine comparison plus convergence ratios; a plain dict ready for JSON."""
    prepared = prepare(cfg)
    coef = coefficient_train(cfg)
    p = prepared.problem
    times = list(cfg.outputs.times)
    snaps = _run(prepared, coef, cfg, times)
    name = primary_field(p)
    lchs = [decode(s.state, p, name).real for s in snaps]
    report: dict = {
        "field": name,
        "times": times,
        "success_probability": [s.success_probability for s in snaps],
        "fidelity": coef.fidelity,
        "notices": [],
    }
    dense = None
    if cfg.validation.dense:
        if prepared.a.n_qubits > DENSE_CAP_QUBITS:
            report["notices"].append(f"dense comparisons skipped: {prepared.a.n_qubits} qubits exceed the cap")
        else:
            dense_w = dense_states(prepared, times)
            dense = [decode(w, p, name).real for w in dense_w]
            report["lchs_vs_dense"] = [relative_error(x, y) for x, y in zip(lchs, dense)]
            report["magnitude_bias"] = [
                float(np.linalg.norm(x) / np.linalg.norm(y) - 1) if np.linalg.norm(y) > 0 else 0.0
                for x, y in zip(lchs, dense)
            ]
            trace = norm_trace(prepared.a.dense(), prepared.w0, p.T, samples=11)
            report["dense_norm_trace"] = {
                "t": trace.times.tolist(),
                "norm": (trace.norms * np.exp(prepared.shift * trace.times)).tolist(),
            }
    if cfg.validation.fdm:
        fdm = fdm_fields(cfg, times)
        report["lchs_vs_fdm"] = [relative_error(x, y) for x, y in zip(lchs, fdm)]
        if dense is not None:
            report["fdm_vs_dense"] = [relative_error(x, y) for x, y in zip(fdm, dense)]
    if dense is not None:
        report["convergence"] = _convergence(cfg, prepared, coef, dense[-1], name)
    return report


def _convergence(cfg: RunConfig, prepared: Prepared, coef: CoefficientTrain, ref: np.ndarray, name: str) -> dict:
    """Final-time LCHS error under τ-halving and under n_anc + 2."""
    p = prepared.problem
    T = p.T

    def err(c: RunConfig, pr: Prepared, co: CoefficientTrain) -> float:
        s = _run(pr, co, c, [T])[0]
        return relative_error(decode(s.state, pr.problem, name).real, ref)

    base = err(cfg, prepared, coef)
    half = replace(cfg, problem=p.with_time(T, p.tau / 2))
    e_half = err(half, replace(prepared, problem=half.problem), coef)
    more = replace(cfg, lchs=replace(cfg.lchs, n_anc=cfg.lchs.n_anc + 2))
    e_more = err(more, prepared, coefficient_train(more))
    return {
        "error": base,
        "error_tau_half": e_half,
        "tau_ratio": base / e_half if e_half > 0 else math.inf,
        "error_n_anc_plus_2": e_more,
        "n_anc_ratio": base / e_more if e_more > 0 else math.inf,
    }


def export_circuit(cfg: RunConfig) -> Circuit:
    prepared = prepare(cfg)
    coef = coefficient_train(cfg)
    s = cfg.lchs
    prog = lchs_program(prepared.a, coef.phi, s.n_anc, s.n_frac, prepared.problem.tau, prepared.prep, s.order, s.layers, s.max_dt)
    return prog.circuit(prepared.problem.steps)


def coefficient_circuit(coef: CoefficientTrain, layers: int = 4) -> Circuit:
    return coefficient_oracle(coef.phi, layers)


__all__ = [
    "Prepared",
    "SimulationResult",
    "Snapshot",
    "StageError",
    "coefficient_circuit",
    "coefficient_train",
    "decode",
    "dense_states",
    "export_circuit",
    "fdm_fields",
    "prepare",
    "primary_field",
    "relative_error",
    "simulate",
    "step_counts",
    "validate",
]
