"""Gate-level LCHS circuits and their statevector execution.

Qubits are little-endian: qubit ``q`` is bit ``q`` of the amplitude index.
The system register occupies the low qubits, the LCU ancillas the high ones,
so a state reshaped C-order to ``(2**n_anc, 2**n_sys)`` has one row per
ancilla basis state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .mps import TensorTrain, is_right_canonical, lchs_weights, right_canonicalize
from .qubit_op import QubitOperator, adjoint_string, hermitian_split, is_diagonal_string, string_support

log = logging.getLogger(__name__)

UNITARY_ATOL = 1e-12


# --- Hermitian grouping and Trotter plans ------------------------------------


@dataclass(frozen=True)
class HermitianGroup:
    """``c P + conj(c) P†`` for an off-diagonal string, or ``c P`` for a diagonal one."""

    string: str
    coeff: complex

    @property
    def diagonal(self) -> bool:
        return is_diagonal_string(self.string)

    def operator(self, n_qubits: int) -> QubitOperator:
        if self.diagonal:
            return QubitOperator(n_qubits, {self.string: self.coeff})
        return QubitOperator(n_qubits, {self.string: self.coeff, adjoint_string(self.string): self.coeff.conjugate()})


def group_hermitian_pairs(h: QubitOperator, atol: float = 1e-12) -> list[HermitianGroup]:
    """Split a Hermitian operator into self-adjoint summands, in a fixed order.

    Diagonal strings come first, then off-diagonal pairs; each class is
    sorted by factor string so runs are reproducible.
    """
    if not h.is_hermitian(atol):
        raise ValueError("operator is not Hermitian")
    diag, off = [], []
    for s, c in h:
        if is_diagonal_string(s):
            diag.append(HermitianGroup(s, complex(c.real, 0.0)))
        else:
            t = adjoint_string(s)
            if s < t:  # keep one representative per pair
                off.append(HermitianGroup(s, c))
    diag.sort(key=lambda g: g.string)
    off.sort(key=lambda g: g.string)
    return diag + off


@dataclass
class TrotterPlan:
    """Product-formula evolution ``exp(-i G t)`` for a Hermitian generator ``G``."""

    generator: QubitOperator
    order: int = 2
    groups: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.order not in (1, 2):
            raise ValueError("Trotter order must be 1 or 2")
        if not self.groups:
            self.groups = group_hermitian_pairs(self.generator)
        n = self.generator.n_qubits
        dim = 1 << n
        # diagonal groups commute, so they collapse into one phase vector
        self._diag = np.zeros(dim)
        self._off = []
        for g in self.groups:
            src, dst = string_support(g.string)
            if g.diagonal:
                self._diag[src] += g.coeff.real
            else:
                mag = abs(g.coeff)
                self._off.append((src, dst, mag, g.coeff / mag))
        self._has_diag = bool(np.any(self._diag))

    @property
    def n_qubits(self) -> int:
        return self.generator.n_qubits

    @property
    def is_zero(self) -> bool:
        return not self._has_diag and not self._off

    def factor_count(self) -> int:
        """Exponential factors per step."""
        m = len(self._off) + (1 if self._has_diag else 0)
        return m if self.order == 1 else max(2 * m - 1, 0)

    def _apply_diag(self, v: np.ndarray, theta: float) -> None:
        if self._has_diag:
            v *= np.exp(-1j * theta * self._diag)

    @staticmethod
    def _apply_pair(v: np.ndarray, src, dst, mag: float, phase: complex, theta: float) -> None:
        c, s = math.cos(theta * mag), math.sin(theta * mag)
        a = v[..., src]
        b = v[..., dst]
        v[..., src] = c * a - 1j * s * phase.conjugate() * b
        v[..., dst] = c * b - 1j * s * phase * a

    def step(self, v: np.ndarray, t: float) -> None:
        """In place: one product-formula step of duration ``t`` along the last axis."""
        if self.is_zero or t == 0:
            return
        if self.order == 1:
            self._apply_diag(v, t)
            for src, dst, mag, ph in self._off:
                self._apply_pair(v, src, dst, mag, ph, t)
            return
        half = 0.5 * t
        if not self._off:
            self._apply_diag(v, t)
            return
        self._apply_diag(v, half)
        for src, dst, mag, ph in self._off[:-1]:
            self._apply_pair(v, src, dst, mag, ph, half)
        src, dst, mag, ph = self._off[-1]
        self._apply_pair(v, src, dst, mag, ph, t)
        for src, dst, mag, ph in reversed(self._off[:-1]):
            self._apply_pair(v, src, dst, mag, ph, half)
        self._apply_diag(v, half)


def exp_group_apply(group: HermitianGroup, theta: float, v: np.ndarray, n_qubits: int) -> np.ndarray:
    """``exp(-iθ·group) v`` exactly."""
    out = np.array(v, dtype=complex)
    src, dst = string_support(group.string)
    if group.diagonal:
        out[..., src] *= np.exp(-1j * theta * group.coeff.real)
    else:
        mag = abs(group.coeff)
        TrotterPlan._apply_pair(out, src, dst, mag, group.coeff / mag, theta)
    return out


def trotter_step(plan: TrotterPlan, v: np.ndarray, t: float) -> np.ndarray:
    out = np.array(v, dtype=complex)
    plan.step(out, t)
    return out


# --- gates and circuits ------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    """Dense 1- or 2-qubit gate; for two qubits the first listed is the high bit of the matrix index."""

    name: str
    qubits: tuple
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        k = len(self.qubits)
        if m.shape != (1 << k, 1 << k):
            raise ValueError(f"gate {self.name}: matrix shape {m.shape} does not match {k} qubits")
        if not np.allclose(m.conj().T @ m, np.eye(1 << k), atol=UNITARY_ATOL):
            raise ValueError(f"gate {self.name}: matrix is not unitary")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))

    def inverse(self) -> "Gate":
        return Gate(self.name + "_dg" if not self.name.endswith("_dg") else self.name[:-3], self.qubits, self.matrix.conj().T)

    def apply(self, psi: np.ndarray, n_qubits: int) -> np.ndarray:
        t = psi.reshape([2] * n_qubits)
        axes = [n_qubits - 1 - q for q in self.qubits]
        k = len(axes)
        g = self.matrix.reshape([2] * (2 * k))
        t = np.tensordot(g, t, axes=(list(range(k, 2 * k)), axes))
        t = np.moveaxis(t, list(range(k)), axes)
        return t.reshape(-1)


@dataclass(frozen=True)
class EvolutionBlock:
    """``exp(-i G t)`` on the system register by ``plan``, optionally controlled by one qubit."""

    label: str
    plan: TrotterPlan
    time: float
    control: int | None = None
    slices: int = 1  # product-formula steps of duration time/slices

    def __post_init__(self) -> None:
        if self.slices < 1:
            raise ValueError("slices must be >= 1")

    def inverse(self) -> "EvolutionBlock":
        # the second-order formula is symmetric, so its inverse is the same formula at -t;
        # the first-order one needs reversed factors, which a sign flip does not give
        if self.plan.order != 2:
            raise ValueError("only symmetric (second-order) evolution blocks can be inverted")
        return EvolutionBlock(self.label, self.plan, -self.time, self.control, self.slices)

    def _steps(self, v: np.ndarray) -> None:
        dt = self.time / self.slices
        for _ in range(self.slices):
            self.plan.step(v, dt)

    def apply(self, psi: np.ndarray, n_qubits: int) -> np.ndarray:
        ns = self.plan.n_qubits
        if self.control is None:
            self._steps(psi.reshape(-1, 1 << ns))
            return psi
        c = self.control
        if c < ns or c >= n_qubits:
            raise ValueError("evolution control must be an ancilla qubit")
        view = psi.reshape(1 << (n_qubits - c - 1), 2, 1 << (c - ns), 1 << ns)[:, 1]
        self._steps(view)
        return psi


H_GATE = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
X_GATE = np.array([[0, 1], [1, 0]])
CX_GATE = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


@dataclass
class Circuit:
    n_qubits: int
    ops: list = field(default_factory=list)
    n_system: int = 0

    def append(self, op) -> "Circuit":
        qs = op.qubits if isinstance(op, Gate) else ((op.control,) if op.control is not None else ())
        if any(not 0 <= q < self.n_qubits for q in qs):
            raise ValueError(f"gate targets {qs} out of range for {self.n_qubits} qubits")
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable) -> "Circuit":
        for op in ops:
            self.append(op)
        return self

    def shifted(self, offset: int, n_qubits: int) -> "Circuit":
        """Same gates on qubits ``q + offset`` of a wider register."""
        out = Circuit(n_qubits, n_system=self.n_system)
        for g in self.ops:
            if not isinstance(g, Gate):
                raise ValueError("only dense gates can be relocated")
            out.append(Gate(g.name, tuple(q + offset for q in g.qubits), g.matrix))
        return out

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [op.inverse() for op in reversed(self.ops)], self.n_system)

    def run(self, psi: np.ndarray | None = None) -> np.ndarray:
        dim = 1 << self.n_qubits
        if psi is None:
            psi = np.zeros(dim, dtype=complex)
            psi[0] = 1.0
        else:
            psi = np.array(psi, dtype=complex).reshape(-1)
            if psi.size != dim:
                raise ValueError(f"state has {psi.size} amplitudes, circuit needs {dim}")
        for op in self.ops:
            psi = op.apply(psi, self.n_qubits)
        return psi

    def counts(self) -> dict:
        out = {"one_qubit": 0, "two_qubit": 0, "evolution_blocks": 0, "exponential_factors": 0}
        for op in self.ops:
            if isinstance(op, Gate):
                out["one_qubit" if len(op.qubits) == 1 else "two_qubit"] += 1
            else:
                out["evolution_blocks"] += 1
                out["exponential_factors"] += op.plan.factor_count() * op.slices
        return out

    def to_text(self) -> str:
        lines = [f"# circuit n_qubits={self.n_qubits} n_system={self.n_system}"]
        for op in self.ops:
            if isinstance(op, Gate):
                lines.append(f"gate {op.name} " + " ".join(f"q{q}" for q in op.qubits))
                for row in op.matrix:
                    lines.append("  " + " ".join(f"({z.real:.17g},{z.imag:.17g})" for z in row))
            else:
                ctrl = f" ctrl=q{op.control}" if op.control is not None else ""
                lines.append(
                    f"evolve {op.label} t={op.time:.17g}{ctrl} order={op.plan.order} slices={op.slices} factors={op.plan.factor_count()}"
                )
        return "\n".join(lines) + "\n"


# --- MPS to circuit ----------------------------------------------------------


def complete_unitary(columns: dict[int, np.ndarray], dim: int) -> np.ndarray:
    """Unitary with the given orthonormal columns at the given positions."""
    pos = sorted(columns)
    v = np.stack([np.asarray(columns[p], dtype=complex) for p in pos], axis=1)
    if not np.allclose(v.conj().T @ v, np.eye(len(pos)), atol=1e-10):
        raise ValueError("columns are not orthonormal")
    u, _, _ = np.linalg.svd(v, full_matrices=True)
    rest = u[:, len(pos):]
    out = np.zeros((dim, dim), dtype=complex)
    free = [c for c in range(dim) if c not in columns]
    for p in pos:
        out[:, p] = columns[p]
    for i, c in enumerate(free):
        out[:, c] = rest[:, i]
    return out


def mps_to_circuit_chi2(t: TensorTrain, offset: int = 0, n_qubits: int | None = None) -> Circuit:
    """Sequential circuit mapping ``|0...0>`` to a normalized right-canonical train of bond <= 2.

    Gates run from the most significant site down; each passes its right
    bond index to the next qubit.  ``offset`` places the register.
    """
    n = t.n_sites
    if t.max_bond > 2:
        raise ValueError(f"bond dimension {t.max_bond} exceeds 2")
    if not is_right_canonical(t):
        raise ValueError("train must be right-canonical")
    if not math.isclose(np.linalg.norm(t.cores[0]), 1.0, rel_tol=0, abs_tol=1e-10):
        raise ValueError("train must be normalized")
    total = n + offset if n_qubits is None else n_qubits
    circ = Circuit(total)
    for i, c in enumerate(t.cores):
        q = offset + n - 1 - i
        r0, _, r1 = c.shape
        if r1 == 2:
            cols = {2 * b: c[b, :, :].reshape(4) for b in range(r0)}
            circ.append(Gate(f"U{n - i}", (q, q - 1), complete_unitary(cols, 4)))
        else:
            cols = {b: c[b, :, 0] for b in range(r0)}
            circ.append(Gate(f"U{n - i}", (q,), complete_unitary(cols, 2)))
    return circ


def _apply_gate_to_train(t: TensorTrain, g: Gate, offset: int) -> TensorTrain:
    n = t.n_sites
    cores = list(t.cores)
    if len(g.qubits) == 1:
        i = n - 1 - (g.qubits[0] - offset)
        cores[i] = np.einsum("ab,lbr->lar", g.matrix, cores[i])
        return TensorTrain(cores)
    qa, qb = g.qubits
    i = n - 1 - (qa - offset)
    if n - 1 - (qb - offset) != i + 1:
        raise ValueError("two-qubit gate must act on neighbouring sites")
    theta = np.einsum("lar,rbs->labs", cores[i], cores[i + 1])
    m = g.matrix.reshape(2, 2, 2, 2)
    theta = np.einsum("abcd,lcds->labs", m, theta)
    l, _, _, s_ = theta.shape
    u, s, vt = np.linalg.svd(theta.reshape(l * 2, 2 * s_), full_matrices=False)
    k = max(1, int(np.sum(s > 1e-14 * s[0])))
    cores[i] = u[:, :k].reshape(l, 2, k)
    cores[i + 1] = (s[:k, None] * vt[:k]).reshape(k, 2, s_)
    return TensorTrain(cores)


def mps_to_circuit_layered(t: TensorTrain, layers: int, offset: int = 0, n_qubits: int | None = None) -> Circuit:
    """Approximate preparation of a higher-bond train by repeated bond-2 disentangling."""
    if layers < 1:
        raise ValueError("layers must be >= 1")
    n = t.n_sites
    cur = t.scale(1.0 / t.norm())
    found = []
    for _ in range(layers):
        trunc = right_canonicalize(cur, chi_cap=2)
        trunc = right_canonicalize(trunc.scale(1.0 / trunc.norm()))
        c = mps_to_circuit_chi2(trunc)
        found.append(c)
        for g in c.inverse().ops:
            cur = _apply_gate_to_train(cur, g, 0)
    total = n + offset if n_qubits is None else n_qubits
    out = Circuit(total)
    for c in reversed(found):
        for g in c.ops:
            out.append(Gate(g.name, tuple(q + offset for q in g.qubits), g.matrix))
    return out


def coefficient_oracle(phi: TensorTrain, layers: int = 4, offset: int = 0, n_qubits: int | None = None) -> Circuit:
    """``O_coef`` on qubits ``offset .. offset + n_anc - 1``."""
    phi = right_canonicalize(phi.scale(1.0 / phi.norm()))
    if phi.max_bond <= 2:
        return mps_to_circuit_chi2(phi, offset, n_qubits)
    return mps_to_circuit_layered(phi, layers, offset, n_qubits)


# --- state preparation -------------------------------------------------------


def _axis_range_gates(lo: int, hi: int, nbits: int, offset: int) -> list[Gate]:
    """H/X/CX gates preparing the uniform superposition over ``lo..hi`` on one axis."""
    length = hi - lo + 1
    if length < 1 or length & (length - 1) or lo < 0 or hi >= 1 << nbits:
        raise ValueError(f"range {lo}..{hi} is not a power-of-two interval")
    k = length.bit_length() - 1
    gates: list[Gate] = []
    if lo % length == 0:
        for b in range(k):
            gates.append(Gate("H", (offset + b,), H_GATE))
        for b in range(k, nbits):
            if lo >> b & 1:
                gates.append(Gate("X", (offset + b,), X_GATE))
        return gates
    half = length // 2
    if k == 0 or lo % half:
        raise ValueError(f"range {lo}..{hi} is not two aligned halves")
    pa, pb = lo >> (k - 1), (lo + half) >> (k - 1)
    diff = pa ^ pb
    pivot = diff.bit_length() - 1
    if pa >> pivot & 1:
        pa, pb = pb, pa
    for b in range(k - 1):
        gates.append(Gate("H", (offset + b,), H_GATE))
    for b in range(nbits - k + 1):
        if b != pivot and pa >> b & 1:
            gates.append(Gate("X", (offset + k - 1 + b,), X_GATE))
    gates.append(Gate("H", (offset + k - 1 + pivot,), H_GATE))
    for b in range(pivot - 1, -1, -1):
        if diff >> b & 1:
            gates.append(Gate("CX", (offset + k - 1 + pivot, offset + k - 1 + b), CX_GATE))
    return gates


def box_state_prep(ranges: Sequence[tuple[int, int]], nbits: Sequence[int], block: int = 0, block_qubits: int = 0) -> Circuit:
    """Uniform superposition over an axis-aligned box of nodes, with the block register set to ``block``."""
    if len(ranges) != len(nbits):
        raise ValueError("one range per axis is required")
    n_sys = sum(nbits)
    circ = Circuit(n_sys + block_qubits, n_system=n_sys + block_qubits)
    offset = 0
    for (lo, hi), nb in zip(ranges, nbits):
        circ.extend(_axis_range_gates(lo, hi, nb, offset))
        offset += nb
    for b in range(block_qubits):
        if block >> b & 1:
            circ.append(Gate("X", (n_sys + b,), X_GATE))
    return circ


# --- select oracle and the full run ------------------------------------------


def slices_for(t: float, max_dt: float | None) -> int:
    """Product-formula steps needed so none is longer than ``max_dt``."""
    if max_dt is None:
        return 1
    if max_dt <= 0:
        raise ValueError("max_dt must be positive")
    return max(1, math.ceil(abs(t) / max_dt - 1e-12))


def select_oracle_blocks(
    l_plan: TrotterPlan, tau: float, n_anc: int, n_frac: int, n_system: int, max_dt: float | None = None
) -> list[EvolutionBlock]:
    """Controlled ``O_L`` blocks realizing ``Σ_a |a><a| ⊗ exp(-i k_a L τ)``.

    Control bit ``m`` carries time ``2^{m - n_frac} τ`` (the top bit with a
    minus sign); ``max_dt`` caps the length of one product-formula step.
    """
    if l_plan.is_zero:
        return []
    times = [2.0 ** (m - n_frac) * tau for m in range(n_anc - 1)] + [-(2.0 ** (n_anc - 1 - n_frac)) * tau]
    return [
        EvolutionBlock(f"O_L[{m}]", l_plan, t, n_system + m, slices_for(t, max_dt)) for m, t in enumerate(times)
    ]


def apply_select_oracle(
    psi: np.ndarray, l_plan: TrotterPlan, tau: float, n_anc: int, n_frac: int, max_dt: float | None = None
) -> np.ndarray:
    n_sys = l_plan.n_qubits
    psi = np.array(psi, dtype=complex).reshape(-1)
    for blk in select_oracle_blocks(l_plan, tau, n_anc, n_frac, n_sys, max_dt):
        psi = blk.apply(psi, n_sys + n_anc)
    return psi


@dataclass
class LchsResult:
    branch: np.ndarray  # unnormalized system vector on ancilla |0...0>
    success_probability: float
    state: np.ndarray  # normalized branch
    solution: np.ndarray  # recovered w(T)
    ancilla_weight: float  # ‖c‖₁ used for the recovery
    circuit: Circuit | None  # full circuit, kept for the last snapshot only


@dataclass
class LchsProgram:
    """The pieces of the LCHS circuit; ``circuit(steps)`` strings them together."""

    n_system: int
    n_anc: int
    prep: Circuit | None
    coef: Circuit
    step_ops: list  # one time step: O_H then SEL_L
    dissipative: bool = True  # False when L = 0 and every branch carries the same unitary

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.n_anc

    def circuit(self, steps: int) -> Circuit:
        """Full circuit: prep, ``O_coef``, ``steps`` × (``O_H`` then ``SEL_L``), ``O_coef†``."""
        circ = Circuit(self.n_qubits, n_system=self.n_system)
        if self.prep is not None:
            circ.extend(self.prep.ops)
        circ.extend(self.coef.ops)
        for _ in range(steps):
            circ.extend(self.step_ops)
        circ.extend(self.coef.inverse().ops)
        return circ


def lchs_program(
    a: QubitOperator,
    phi: TensorTrain,
    n_anc: int,
    n_frac: int,
    tau: float,
    prep: Circuit | None = None,
    order: int = 2,
    layers: int = 4,
    max_dt: float | None = None,
) -> LchsProgram:
    if phi.n_sites != n_anc:
        raise ValueError("coefficient train must have n_anc sites")
    n_sys = a.n_qubits
    if prep is not None and prep.n_qubits > n_sys:
        raise ValueError("state preparation acts outside the system register")
    l_op, h_op = hermitian_split(a)
    l_plan, h_plan = TrotterPlan(l_op, order), TrotterPlan(h_op, order)
    total = n_sys + n_anc
    coef = coefficient_oracle(phi, layers, offset=n_sys, n_qubits=total)
    ops = [] if h_plan.is_zero else [EvolutionBlock("O_H", h_plan, tau, None, slices_for(tau, max_dt))]
    ops += select_oracle_blocks(l_plan, tau, n_anc, n_frac, n_sys, max_dt)
    return LchsProgram(n_sys, n_anc, prep, coef, ops, not l_plan.is_zero)


def lchs_circuit(
    a: QubitOperator,
    phi: TensorTrain,
    n_anc: int,
    n_frac: int,
    tau: float,
    steps: int,
    prep: Circuit | None = None,
    order: int = 2,
    layers: int = 4,
    max_dt: float | None = None,
) -> Circuit:
    return lchs_program(a, phi, n_anc, n_frac, tau, prep, order, layers, max_dt).circuit(steps)


def check_dissipative(a: QubitOperator, atol: float = 1e-10) -> None:
    """Raise if the Hermitian part of ``a`` has a negative eigenvalue (dense probe up to 12 qubits)."""
    l_op, _ = hermitian_split(a)
    if a.n_qubits <= 12 and len(l_op):
        lam = float(np.linalg.eigvalsh(l_op.dense())[0])
        if lam < -atol:
            raise ValueError(f"Hermitian part has eigenvalue {lam:.3e} < 0; apply positive_shift first")


def run_lchs_snapshots(
    a: QubitOperator,
    phi: TensorTrain,
    w0: np.ndarray,
    n_anc: int,
    n_frac: int,
    tau: float,
    step_counts: Sequence[int],
    prep: Circuit | None = None,
    order: int = 2,
    layers: int = 4,
    shift: float = 0.0,
    max_dt: float | None = None,
) -> list[LchsResult]:
    """One evolution, post-selected after each requested number of steps.

    Each snapshot is what the full circuit with that many steps would
    produce: ``O_coef†`` is applied to a copy of the running state.
    """
    w0 = np.asarray(w0, dtype=complex).reshape(-1)
    n_sys = a.n_qubits
    if w0.size != 1 << n_sys:
        raise ValueError(f"initial state has {w0.size} amplitudes, system needs {1 << n_sys}")
    norm0 = float(np.linalg.norm(w0))
    if norm0 == 0:
        raise ValueError("initial state has zero norm")
    if any(k < 0 for k in step_counts):
        raise ValueError("step counts must be non-negative")
    check_dissipative(a)
    prog = lchs_program(a, phi, n_anc, n_frac, tau, prep, order, layers, max_dt)
    total = prog.n_qubits
    psi = np.zeros(1 << total, dtype=complex)
    if prep is None:
        psi[: 1 << n_sys] = w0 / norm0
    else:
        psi[0] = 1.0
        psi = Circuit(total, list(prep.ops)).run(psi)
    psi = prog.coef.run(psi)
    unprep = prog.coef.inverse()
    # with L = 0 the branch is already the evolved state; the truncated
    # quadrature weight would only rescale it
    weight = float(lchs_weights(n_anc, n_frac).sum()) if prog.dissipative else 1.0
    found: dict[int, LchsResult] = {}
    wanted = sorted(set(int(k) for k in step_counts))
    done = 0
    for k in wanted:
        for _ in range(k - done):
            for op in prog.step_ops:
                psi = op.apply(psi, total)
        done = k
        out = unprep.run(psi.copy())
        branch = out[: 1 << n_sys].copy()
        p = float(np.vdot(branch, branch).real)
        sol = norm0 * weight * math.exp(shift * tau * k) * branch
        state = branch / math.sqrt(p) if p > 0 else branch
        found[k] = LchsResult(branch, p, state, sol, weight, prog.circuit(k) if k == wanted[-1] else None)
    return [found[int(k)] for k in step_counts]


def run_lchs(
    a: QubitOperator,
    phi: TensorTrain,
    w0: np.ndarray,
    n_anc: int,
    n_frac: int,
    tau: float,
    steps: int,
    prep: Circuit | None = None,
    order: int = 2,
    layers: int = 4,
    shift: float = 0.0,
    max_dt: float | None = None,
) -> LchsResult:
    """Execute the LCHS circuit and post-select the ancilla register on ``|0...0>``.

    ``w0`` is injected normalized into the system register unless ``prep``
    is given, in which case ``prep`` must prepare ``w0/‖w0‖``.  The
    recovered solution is ``‖w0‖ ‖c‖₁ e^{shift T}`` times the projected branch,
    with ``‖c‖₁`` replaced by 1 when ``L = 0``.
    """
    return run_lchs_snapshots(a, phi, w0, n_anc, n_frac, tau, [steps], prep, order, layers, shift, max_dt)[0]


__all__ = [
    "Circuit",
    "EvolutionBlock",
    "Gate",
    "HermitianGroup",
    "LchsProgram",
    "LchsResult",
    "TrotterPlan",
    "apply_select_oracle",
    "box_state_prep",
    "check_dissipative",
    "coefficient_oracle",
    "complete_unitary",
    "exp_group_apply",
    "group_hermitian_pairs",
    "lchs_circuit",
    "lchs_program",
    "mps_to_circuit_chi2",
    "mps_to_circuit_layered",
    "run_lchs",
    "run_lchs_snapshots",
    "select_oracle_blocks",
    "slices_for",
    "trotter_step",
]
