"""Spatial discretization of the two PDE families into ``dw/dt = -A w``.

Second order in time::

    ϱ ü + ζ u̇ - ∇·κ∇u + α u = 0

is rewritten for ``w = (√ϱ u̇, √κ ∂_0 u, ..., √κ ∂_{d-1} u, √α u)`` with the
block index held in a small register above the node register.  First order::

    u̇ = ∇·κ∇u - β·∇u - α u

uses ``w = u`` directly.  Both matrices are built symbolically from shift
strings and minimized diagonal coefficient operators.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .grid import Boundary, BoundarySpec, Grid, PiecewiseField, node_array
from .logicmin import field_to_operator, naive_term_count
from .qubit_op import (
    QubitOperator,
    difference_operator,
    embed_axis,
    face_projector,
    hermitian_split,
    is_diagonal_string,
    string_support,
)


class Family(str, enum.Enum):
    SECOND_ORDER = "second_order"
    FIRST_ORDER = "first_order"


SECOND_ORDER_DEFAULTS = {"rho": 1.0, "zeta": 0.0, "kappa": 1.0, "alpha": 0.0}
FIRST_ORDER_DEFAULTS = {"kappa": 1.0, "alpha": 0.0}


def beta_name(axis: int) -> str:
    return f"beta{axis}"


@dataclass(frozen=True)
class StateLayout:
    """Register map of ``w``: block register on the high qubits, nodes below."""

    block_qubits: int
    system_qubits: int
    n_blocks: int

    @property
    def n_qubits(self) -> int:
        return self.block_qubits + self.system_qubits

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def block(self, v: np.ndarray, b: int) -> np.ndarray:
        if not 0 <= b < self.n_blocks:
            raise ValueError(f"block {b} out of range (layout has {self.n_blocks})")
        n = 1 << self.system_qubits
        return np.asarray(v)[b * n:(b + 1) * n]


@dataclass(frozen=True)
class PdeProblem:
    family: Family
    grid: Grid
    boundary: BoundarySpec
    fields: Mapping[str, PiecewiseField] = field(default_factory=dict)
    T: float = 1.0
    tau: float = 0.1

    def __post_init__(self) -> None:
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if len(self.boundary.faces) != self.grid.d:
            raise ValueError(f"boundary: {len(self.boundary.faces)} axes given for a {self.grid.d}-dimensional grid")
        defaults = dict(SECOND_ORDER_DEFAULTS if fam is Family.SECOND_ORDER else FIRST_ORDER_DEFAULTS)
        if fam is Family.FIRST_ORDER:
            defaults.update({beta_name(mu): 0.0 for mu in range(self.grid.d)})
        unknown = set(self.fields) - set(defaults)
        if unknown:
            raise ValueError(f"coefficients {sorted(unknown)} are not used by the {fam.value} family")
        full = {}
        for name, dflt in defaults.items():
            f = self.fields.get(name, PiecewiseField.constant(dflt, name))
            full[name] = PiecewiseField(f.default, f.regions, name)
        object.__setattr__(self, "fields", full)
        n = self.grid.n_nodes
        for name, f in full.items():
            vals = f.values(n)
            if name == "rho" and np.any(vals <= 0):
                raise ValueError("coefficient rho must be positive everywhere")
            if name in ("zeta", "kappa", "alpha") and np.any(vals < 0):
                raise ValueError(f"coefficient {name} must be non-negative everywhere")
        if not (self.T > 0 and self.tau > 0):
            raise ValueError("time: T and tau must be positive")
        r = self.T / self.tau
        if abs(r - round(r)) > 1e-9 * max(1.0, r) or round(r) < 1:
            raise ValueError(f"time: T/tau = {r} is not a positive integer")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.tau))

    def field(self, name: str) -> PiecewiseField:
        return self.fields[name]

    def values(self, name: str) -> np.ndarray:
        return self.fields[name].values(self.grid.n_nodes)

    @property
    def layout(self) -> StateLayout:
        n = self.grid.n_qubits
        if self.family is Family.FIRST_ORDER:
            return StateLayout(0, n, 1)
        d = self.grid.d
        return StateLayout(math.ceil(math.log2(d + 2)), n, d + 2)

    def with_time(self, T: float, tau: float | None = None) -> "PdeProblem":
        return PdeProblem(self.family, self.grid, self.boundary, self.fields, T, self.tau if tau is None else tau)


# --- diagonal coefficient operators -----------------------------------------


def _signed_part(f: PiecewiseField, positive: bool) -> PiecewiseField:
    clip = (lambda x: max(x, 0.0)) if positive else (lambda x: min(x, 0.0))
    return PiecewiseField(clip(f.default), tuple((i, clip(v)) for i, v in f.regions), f.name)


def coefficient_operators(p: PdeProblem, method: str = "auto") -> dict[str, QubitOperator]:
    """Minimized diagonal operators needed by the assembly of ``p``."""
    g = p.grid
    if p.family is Family.SECOND_ORDER:
        return {
            "rho_inv": field_to_operator(p.field("rho"), g, "inv", method),
            "rho_inv_sqrt": field_to_operator(p.field("rho"), g, "inv_sqrt", method),
            "kappa_sqrt": field_to_operator(p.field("kappa"), g, "sqrt", method),
            "alpha_sqrt": field_to_operator(p.field("alpha"), g, "sqrt", method),
            "zeta": field_to_operator(p.field("zeta"), g, "identity", method),
        }
    ops = {
        "kappa": field_to_operator(p.field("kappa"), g, "identity", method),
        "alpha": field_to_operator(p.field("alpha"), g, "identity", method),
    }
    for mu in range(g.d):
        beta = p.field(beta_name(mu))
        ops[f"{beta_name(mu)}_plus"] = field_to_operator(_signed_part(beta, True), g, "identity", method)
        ops[f"{beta_name(mu)}_minus"] = field_to_operator(_signed_part(beta, False), g, "identity", method)
    return ops


def term_counts(p: PdeProblem, ops: Mapping[str, QubitOperator] | None = None) -> dict[str, tuple[int, int]]:
    """``name -> (naive |I|+1, minimized)`` term counts of each coefficient operator."""
    ops = coefficient_operators(p) if ops is None else ops
    source = {
        "rho_inv": "rho", "rho_inv_sqrt": "rho", "kappa_sqrt": "kappa",
        "alpha_sqrt": "alpha", "zeta": "zeta", "kappa": "kappa", "alpha": "alpha",
    }
    out = {}
    for name, op in ops.items():
        fname = source.get(name, name.rsplit("_", 1)[0])
        out[name] = (naive_term_count(p.field(fname)), len(op))
    return out


def _require(ops: Mapping[str, QubitOperator], names: tuple[str, ...]) -> None:
    missing = [k for k in names if k not in ops]
    if missing:
        raise ValueError(f"missing diagonal operators: {missing}")


# --- boundary edge strings ---------------------------------------------------


def _upper_edge(axis: int, grid: Grid) -> QubitOperator:
    """``σ11^{⊗(n-1)} ⊗ (2σ11 - σ10)`` on ``axis``: forward row swapped for backward at the top face."""
    nb = grid.nbits[axis]
    local = QubitOperator(nb, {"1" * nb: 2.0, "1" * (nb - 1) + "+": -1.0})
    return embed_axis(local, axis, grid)


def _lower_edge(axis: int, grid: Grid) -> QubitOperator:
    """``σ00^{⊗(n-1)} ⊗ (2σ00 - σ01)`` on ``axis``: backward row swapped for forward at the bottom face."""
    nb = grid.nbits[axis]
    local = QubitOperator(nb, {"0" * nb: 2.0, "0" * (nb - 1) + "-": -1.0})
    return embed_axis(local, axis, grid)


def forward_operator(p: PdeProblem, axis: int) -> QubitOperator:
    """``D⁺`` with its top row replaced by the backward stencil on a Dirichlet top face."""
    dp = difference_operator("forward", axis, p.grid, p.boundary)
    if p.boundary.upper(axis) is Boundary.DIRICHLET:
        dp = dp + _upper_edge(axis, p.grid).scale(1.0 / p.grid.h)
    return dp


def gradient_operator(p: PdeProblem, axis: int) -> QubitOperator:
    """``D⁻`` with its bottom row replaced by the forward stencil on a Neumann bottom face.

    This is the gradient that seeds and evolves the blocks ``1..d``.
    """
    dm = difference_operator("backward", axis, p.grid, p.boundary)
    if p.boundary.lower(axis) is Boundary.NEUMANN:
        dm = dm - _lower_edge(axis, p.grid).scale(1.0 / p.grid.h)
    return dm


# --- assembly ----------------------------------------------------------------


def assemble_second_order(p: PdeProblem, ops: Mapping[str, QubitOperator] | None = None) -> QubitOperator:
    if p.family is not Family.SECOND_ORDER:
        raise ValueError("assemble_second_order needs a second_order problem")
    ops = coefficient_operators(p) if ops is None else ops
    _require(ops, ("rho_inv", "rho_inv_sqrt", "kappa_sqrt", "alpha_sqrt", "zeta"))
    lay = p.layout
    nb, d = lay.block_qubits, p.grid.d

    def blk(i: int, j: int) -> QubitOperator:
        return QubitOperator.ketbra(i, j, nb)

    ri, ris, ks, as_ = ops["rho_inv"], ops["rho_inv_sqrt"], ops["kappa_sqrt"], ops["alpha_sqrt"]
    a = blk(0, 0).kron(ri @ ops["zeta"])
    for mu in range(d):
        a = a - blk(0, mu + 1).kron(ris @ forward_operator(p, mu) @ ks)
        a = a - blk(mu + 1, 0).kron(ks @ gradient_operator(p, mu) @ ris)
    absorb = ris @ as_
    a = a + blk(0, d + 1).kron(absorb) - blk(d + 1, 0).kron(absorb)
    return a


def assemble_first_order(p: PdeProblem, ops: Mapping[str, QubitOperator] | None = None) -> QubitOperator:
    if p.family is not Family.FIRST_ORDER:
        raise ValueError("assemble_first_order needs a first_order problem")
    g = p.grid
    ops = coefficient_operators(p) if ops is None else ops
    _require(ops, ("kappa", "alpha") + tuple(f"{beta_name(mu)}_{s}" for mu in range(g.d) for s in ("plus", "minus")))
    kap = ops["kappa"]
    h = g.h
    # diffusion enters with a minus sign; upwind advection and absorption with a plus,
    # so that dw/dt = -A w reproduces du/dt = div(k grad u) - b.grad u - a u
    a = ops["alpha"]
    for mu in range(g.d):
        dp = difference_operator("forward", mu, g, p.boundary)
        dm = difference_operator("backward", mu, g, p.boundary)
        a = a - (dp @ kap @ dm + dm @ kap @ dp).scale(0.5)
        a = a + ops[f"{beta_name(mu)}_plus"] @ dm + ops[f"{beta_name(mu)}_minus"] @ dp
    # boundary rows; the extra 1/h and 1/h^2 keep the corrections dimensionally
    # consistent with the 1/h^2 diffusion stencil
    for mu in range(g.d):
        lo, hi = face_projector(mu, g, upper=False), face_projector(mu, g, upper=True)
        dp = difference_operator("forward", mu, g, p.boundary)
        dm = difference_operator("backward", mu, g, p.boundary)
        if p.boundary.lower(mu) is Boundary.NEUMANN:
            a = a + (dp @ kap @ lo).scale(0.5 / h)
        if p.boundary.upper(mu) is Boundary.NEUMANN:
            a = a - (dm @ kap @ hi).scale(0.5 / h)
        if p.boundary.lower(mu) is Boundary.DIRICHLET:
            a = a + (kap @ lo).scale(0.5 / h**2)
        if p.boundary.upper(mu) is Boundary.DIRICHLET:
            a = a + (kap @ hi).scale(0.5 / h**2)
    return a


def assemble(p: PdeProblem, ops: Mapping[str, QubitOperator] | None = None) -> QubitOperator:
    if p.family is Family.SECOND_ORDER:
        return assemble_second_order(p, ops)
    return assemble_first_order(p, ops)


# --- spectral shift ----------------------------------------------------------

EIGEN_PROBE_MAX_QUBITS = 12


def gershgorin_lower_bound(op: QubitOperator) -> float:
    """Lower bound on the spectrum of a Hermitian operator from its row sums."""
    dim = 1 << op.n_qubits
    diag = np.zeros(dim)
    radius = np.zeros(dim)
    for s, c in op:
        src, dst = string_support(s)
        if is_diagonal_string(s):
            diag[dst] += c.real
        else:
            radius[dst] += abs(c)
    return float(np.min(diag - radius))


def positive_shift(a: QubitOperator, bound: float | None = None) -> tuple[QubitOperator, float]:
    """Shift ``a`` by a multiple of the identity so its Hermitian part is PSD.

    Returns ``(a + s·I, s)``; solutions of the shifted system must be
    multiplied by ``exp(s·t)``.
    """
    l_part, _ = hermitian_split(a)
    if bound is not None:
        lam = bound
    elif a.n_qubits <= EIGEN_PROBE_MAX_QUBITS:
        lam = float(np.linalg.eigvalsh(l_part.dense())[0]) if len(l_part) else 0.0
    else:
        lam = gershgorin_lower_bound(l_part)
    shift = max(0.0, -lam)
    if shift == 0.0:
        return a, 0.0
    return a + QubitOperator.identity(a.n_qubits, shift), shift


# --- encoding and decoding ---------------------------------------------------


def encode_initial_state(p: PdeProblem, u0, udot0=None) -> tuple[np.ndarray, float]:
    """Unnormalized ``w(0)`` and its norm."""
    u0 = node_array(u0, p.grid, "u0")
    if p.family is Family.FIRST_ORDER:
        if udot0 is not None:
            raise ValueError("udot0 is only used by second_order problems")
        return u0.copy(), float(np.linalg.norm(u0))
    if udot0 is None:
        raise ValueError("second_order problems need an initial velocity udot0")
    udot0 = node_array(udot0, p.grid, "udot0")
    lay = p.layout
    n = p.grid.n_nodes
    w = np.zeros(lay.dim, dtype=complex)
    sk = np.sqrt(p.values("kappa"))
    w[:n] = np.sqrt(p.values("rho")) * udot0
    for mu in range(p.grid.d):
        w[(mu + 1) * n:(mu + 2) * n] = sk * gradient_operator(p, mu).apply(u0)
    d1 = p.grid.d + 1
    w[d1 * n:(d1 + 1) * n] = np.sqrt(p.values("alpha")) * u0
    return w, float(np.linalg.norm(w))


def decode_field(v: np.ndarray, p: PdeProblem, which: str = "u", axis: int | None = None) -> np.ndarray:
    """Node field from a state vector.

    ``which`` is ``udot``, ``grad`` (with ``axis``), ``u`` or ``raw`` for
    second_order problems; first_order problems return the amplitudes for
    ``u`` and ``raw``.
    """
    v = np.asarray(v)
    lay = p.layout
    if v.shape[-1] != lay.dim:
        raise ValueError(f"state has {v.shape[-1]} amplitudes, layout needs {lay.dim}")
    if p.family is Family.FIRST_ORDER:
        if which not in ("u", "raw"):
            raise ValueError(f"field {which!r} is not defined for first_order problems")
        return v.copy()
    if which == "raw":
        return v.copy()
    if which == "udot":
        block, coef = 0, p.values("rho")
    elif which == "grad":
        if axis is None or not 0 <= axis < p.grid.d:
            raise ValueError("decode 'grad' needs a valid axis")
        block, coef = axis + 1, p.values("kappa")
    elif which == "u":
        block, coef = p.grid.d + 1, p.values("alpha")
    else:
        raise ValueError(f"unknown field {which!r}")
    if np.any(coef == 0):
        raise ValueError(f"cannot decode {which!r}: its coefficient vanishes at some nodes")
    return lay.block(v, block) / np.sqrt(coef)


def observable_intensity(v: np.ndarray, region, c_field: PiecewiseField, p: PdeProblem) -> float:
    """``w†(|0><0| ⊗ c̃χ̃c̃)w`` for the node set ``region``."""
    idx = np.asarray(sorted(set(int(i) for i in region)), dtype=int)
    n = p.grid.n_nodes
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError("observable region index out of range")
    w0 = p.layout.block(v, 0)
    c = c_field.values(n)
    return float(np.sum(c[idx] ** 2 * np.abs(w0[idx]) ** 2))


__all__ = [
    "Family",
    "PdeProblem",
    "StateLayout",
    "assemble",
    "assemble_first_order",
    "assemble_second_order",
    "beta_name",
    "coefficient_operators",
    "decode_field",
    "encode_initial_state",
    "forward_operator",
    "gershgorin_lower_bound",
    "gradient_operator",
    "observable_intensity",
    "positive_shift",
    "term_counts",
]
