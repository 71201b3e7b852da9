"""Classical ground truth: dense exponentials, the dense LCHS quadrature,
explicit finite-difference stepping, and a stencil-loop assembly of ``A``
that shares no code with the symbolic one.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .discretize import Family, PdeProblem, beta_name
from .grid import Boundary
from .mps import integration_points, lchs_weights
from .qubit_op import QubitOperator

log = logging.getLogger(__name__)

DENSE_DIM_CAP = 1 << 13


class CapExceeded(ValueError):
    pass


@dataclass
class TimeSeries:
    times: np.ndarray
    states: list
    norms: np.ndarray
    rates: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.norms = np.asarray(self.norms, dtype=float)
        if not (len(self.times) == len(self.states) == len(self.norms)):
            raise ValueError("time series: times, states and norms differ in length")

    def to_csv(self) -> str:
        lines = ["t,norm"] + [f"{t:.17g},{n:.17g}" for t, n in zip(self.times, self.norms)]
        return "\n".join(lines) + "\n"


def as_dense(m) -> np.ndarray:
    if isinstance(m, QubitOperator):
        if (1 << m.n_qubits) > DENSE_DIM_CAP:
            raise CapExceeded(f"dense cap: {1 << m.n_qubits} > {DENSE_DIM_CAP}")
        return m.dense()
    m = np.asarray(m)
    if m.shape[0] > DENSE_DIM_CAP:
        raise CapExceeded(f"dense cap: {m.shape[0]} > {DENSE_DIM_CAP}")
    return m


def expm_multiply(m, t: float, v: np.ndarray) -> np.ndarray:
    """``exp(-m t) v`` by Padé scaling and squaring."""
    m = as_dense(m)
    return scipy.linalg.expm(-t * m) @ np.asarray(v, dtype=complex)


def lchs_quadrature_dense(l_op, h_op, T: float, n_anc: int, n_frac: int, w0: np.ndarray) -> np.ndarray:
    """``Σ_a c_a exp(-i(H + k_a L)T) w0``: the LCHS sum without Trotter error."""
    l_m, h_m = as_dense(l_op), as_dense(h_op)
    w0 = np.asarray(w0, dtype=complex)
    out = np.zeros_like(w0)
    if T == 0:
        return lchs_weights(n_anc, n_frac).sum() * w0
    # diagonalize once per distinct k via the Hermitian generator
    for k, c in zip(integration_points(n_anc, n_frac), lchs_weights(n_anc, n_frac)):
        g = h_m + k * l_m
        evals, evecs = np.linalg.eigh(g)
        out += c * (evecs @ (np.exp(-1j * evals * T) * (evecs.conj().T @ w0)))
    return out


def norm_trace(a, w0: np.ndarray, T: float, samples: int = 21) -> TimeSeries:
    """``‖exp(-A t) w0‖`` at ``samples`` uniform times in ``[0, T]``."""
    m = as_dense(a)
    times = np.linspace(0.0, T, samples)
    step = scipy.linalg.expm(-(times[1] - times[0]) * m) if samples > 1 else None
    w = np.asarray(w0, dtype=complex)
    states, norms = [], []
    for i in range(samples):
        if i:
            w = step @ w
        states.append(w.copy())
        norms.append(np.linalg.norm(w))
    return TimeSeries(times, states, np.array(norms))


# --- stencil-loop assembly ---------------------------------------------------


def _neighbour(p: PdeProblem, j: int, axis: int, step: int) -> int | None:
    """Flat index of the neighbour ``step`` (±1) along ``axis``; None outside a non-periodic lattice."""
    g = p.grid
    x = list(g.coords(j))
    n = g.axis_size(axis)
    y = x[axis] + step
    if 0 <= y < n:
        x[axis] = y
    elif p.boundary.periodic(axis):
        x[axis] = y % n
    else:
        return None
    return g.index(x)


def difference_matrices(p: PdeProblem, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense forward/backward differences with the second-order boundary row swaps."""
    g = p.grid
    n, h = g.n_nodes, g.h
    dp = np.zeros((n, n))
    dm = np.zeros((n, n))
    for j in range(n):
        dp[j, j] -= 1 / h
        up = _neighbour(p, j, axis, +1)
        if up is not None:
            dp[j, up] += 1 / h
        dm[j, j] += 1 / h
        lo = _neighbour(p, j, axis, -1)
        if lo is not None:
            dm[j, lo] -= 1 / h
    if p.family is Family.SECOND_ORDER:
        x = g.axis_coordinate(axis)
        last = g.axis_size(axis) - 1
        if p.boundary.upper(axis) is Boundary.DIRICHLET:
            rows = np.flatnonzero(x == last)
            dp[rows] = dm[rows]
        if p.boundary.lower(axis) is Boundary.NEUMANN:
            rows = np.flatnonzero(x == 0)
            dm[rows] = dp[rows]
    return dp, dm


def _first_order_stencil(p: PdeProblem) -> np.ndarray:
    g = p.grid
    n, h = g.n_nodes, g.h
    kap = p.values("kappa")
    alpha = p.values("alpha")
    rhs = np.zeros((n, n))  # matrix of du/dt = rhs @ u
    for mu in range(g.d):
        beta = p.values(beta_name(mu))
        for j in range(n):
            # diffusive fluxes through the upper and lower cell faces
            for step in (+1, -1):
                nb = _neighbour(p, j, mu, step)
                if nb is not None:
                    kf = 0.5 * (kap[j] + kap[nb])
                    rhs[j, nb] += kf / h**2
                    rhs[j, j] -= kf / h**2
                else:
                    kind = p.boundary.upper(mu) if step > 0 else p.boundary.lower(mu)
                    if kind is Boundary.DIRICHLET:
                        rhs[j, j] -= kap[j] / h**2
            # upwind advection, zero ghost values outside the lattice
            bp, bm = max(beta[j], 0.0), min(beta[j], 0.0)
            lo = _neighbour(p, j, mu, -1)
            up = _neighbour(p, j, mu, +1)
            rhs[j, j] -= bp / h
            if lo is not None:
                rhs[j, lo] += bp / h
            rhs[j, j] += bm / h
            if up is not None:
                rhs[j, up] -= bm / h
    rhs -= np.diag(alpha)
    return -rhs


def _second_order_stencil(p: PdeProblem) -> np.ndarray:
    g = p.grid
    n, d = g.n_nodes, g.d
    lay = p.layout
    rho, zeta = p.values("rho"), p.values("zeta")
    kap, alpha = p.values("kappa"), p.values("alpha")
    ris = np.diag(rho**-0.5)
    ks = np.diag(np.sqrt(kap))
    a = np.zeros((lay.dim, lay.dim))

    def put(bi: int, bj: int, m: np.ndarray) -> None:
        a[bi * n:(bi + 1) * n, bj * n:(bj + 1) * n] += m

    put(0, 0, np.diag(zeta / rho))
    for mu in range(d):
        dp, dm = difference_matrices(p, mu)
        put(0, mu + 1, -ris @ dp @ ks)
        put(mu + 1, 0, -ks @ dm @ ris)
    absorb = np.diag(np.sqrt(alpha) / np.sqrt(rho))
    put(0, d + 1, absorb)
    put(d + 1, 0, -absorb)
    return a


def stencil_matrix(p: PdeProblem) -> np.ndarray:
    """Dense ``A`` assembled node by node from finite-difference stencils."""
    if p.layout.dim > DENSE_DIM_CAP:
        raise CapExceeded(f"dense cap: {p.layout.dim} > {DENSE_DIM_CAP}")
    if p.family is Family.SECOND_ORDER:
        return _second_order_stencil(p)
    return _first_order_stencil(p)


# --- explicit time stepping --------------------------------------------------


def _snapshot_steps(output_times: Sequence[float], dt: float) -> list[int]:
    steps = []
    for t in output_times:
        k = round(t / dt)
        if abs(k * dt - t) > 1e-9 * max(1.0, abs(t)) or k < 0:
            raise ValueError(f"output time {t} is not a multiple of the FDM step {dt}")
        steps.append(int(k))
    return steps


def classical_fdm(p: PdeProblem, u0, udot0=None, output_times: Sequence[float] = (), dt: float | None = None) -> TimeSeries:
    """Explicit stepping on node values.

    Second order: central (leapfrog) time differences with a Taylor first
    step; ``rates`` holds ``u̇`` from centred differences.  First order:
    forward Euler.  ``dt`` defaults to the problem's ``tau``.
    """
    dt = p.tau if dt is None else dt
    g = p.grid
    u = np.asarray(u0, dtype=float).copy()
    steps = _snapshot_steps(output_times, dt)
    last = max(steps) if steps else 0
    if p.family is Family.FIRST_ORDER:
        a = stencil_matrix(p)
        lam = np.max(np.abs(np.linalg.eigvals(a))) if g.n_nodes <= 4096 else np.max(np.sum(np.abs(a), axis=1))
        if dt * lam > 2.0:
            warnings.warn(f"forward Euler step {dt} violates the stability limit {2 / lam:.3g}", RuntimeWarning)
        states = {}
        for k in range(last + 1):
            if k in steps:
                states[k] = u.copy()
            if k < last:
                u = u - dt * (a @ u)
        out = [states[k] for k in steps]
        return TimeSeries(np.array(output_times, float), out, np.array([np.linalg.norm(s) for s in out]))

    if udot0 is None:
        raise ValueError("second_order FDM needs an initial velocity")
    rho, zeta, alpha = p.values("rho"), p.values("zeta"), p.values("alpha")
    kap = np.diag(p.values("kappa"))
    stiff = np.zeros((g.n_nodes, g.n_nodes))
    for mu in range(g.d):
        dp, dm = difference_matrices(p, mu)
        stiff += dp @ kap @ dm
    stiff -= np.diag(alpha)  # ϱ ü = stiff u - ζ u̇
    lam = np.max(np.abs(np.linalg.eigvals(stiff / rho[:, None])))
    if dt * dt * lam > 4.0:
        warnings.warn(f"leapfrog step {dt} violates the stability limit {2 / np.sqrt(lam):.3g}", RuntimeWarning)
    v0 = np.asarray(udot0, dtype=float)
    acc0 = (stiff @ u - zeta * v0) / rho
    prev, cur = u, u + dt * v0 + 0.5 * dt * dt * acc0
    lhs = rho / dt**2 + zeta / (2 * dt)
    snaps, rates = {}, {}
    if 0 in steps:
        snaps[0], rates[0] = u.copy(), v0.copy()
    for k in range(1, last + 1):
        nxt = (2 * rho / dt**2 * cur - (rho / dt**2 - zeta / (2 * dt)) * prev + stiff @ cur) / lhs
        if k in steps:
            snaps[k] = cur.copy()
            rates[k] = (nxt - prev) / (2 * dt)
        prev, cur = cur, nxt
    out = [snaps[k] for k in steps]
    return TimeSeries(
        np.array(output_times, float), out, np.array([np.linalg.norm(s) for s in out]), rates=[rates[k] for k in steps]
    )


__all__ = [
    "CapExceeded",
    "TimeSeries",
    "classical_fdm",
    "difference_matrices",
    "expm_multiply",
    "lchs_quadrature_dense",
    "norm_trace",
    "stencil_matrix",
]
