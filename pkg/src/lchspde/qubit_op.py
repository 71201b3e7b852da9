"""Symbolic algebra of tensor-product strings over {I, σ00, σ01, σ10, σ11}.

A factor string is written most-significant qubit first, so its last
character acts on qubit 0.  Characters::

    I  identity
    0  σ00 = |0><0|
    1  σ11 = |1><1|
    +  σ10 = |1><0|   (raises a bit)
    -  σ01 = |0><1|   (lowers a bit)

Every string acts on a computational basis state as a partial permutation:
it either annihilates ``|j>`` or maps it to a single ``|j'>``.  That is what
makes :meth:`QubitOperator.apply` linear in the state size per term.
"""

from __future__ import annotations

import functools
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

import numpy as np

from .grid import BoundarySpec, Grid

FACTORS = "I01+-"
ZERO_TOL = 1e-14
DENSE_CAP = 12

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "0": np.array([[1, 0], [0, 0]], dtype=complex),
    "1": np.array([[0, 0], [0, 1]], dtype=complex),
    "+": np.array([[0, 0], [1, 0]], dtype=complex),
    "-": np.array([[0, 1], [0, 0]], dtype=complex),
}
_ADJOINT = {"I": "I", "0": "0", "1": "1", "+": "-", "-": "+"}
# (constrained, required input bit, flips)
_ACTION = {
    "I": (0, 0, 0),
    "0": (1, 0, 0),
    "1": (1, 1, 0),
    "+": (1, 0, 1),
    "-": (1, 1, 1),
}
_RANK = {c: i for i, c in enumerate(FACTORS)}


def _build_table() -> dict[tuple[str, str], str | None]:
    table: dict[tuple[str, str], str | None] = {}
    for a in FACTORS:
        for b in FACTORS:
            prod = _MATRICES[a] @ _MATRICES[b]
            match = None
            for c in FACTORS:
                if np.array_equal(prod, _MATRICES[c]):
                    match = c
                    break
            if match is None and np.any(prod):
                raise AssertionError(f"factor set not closed under {a}{b}")
            table[a, b] = match
    return table


_TABLE = _build_table()


def multiply_factors(a: str, b: str) -> str | None:
    """Single-site product ``a·b``; ``None`` is the zero element."""
    return _TABLE[a, b]


def factor_matrix(ch: str) -> np.ndarray:
    return _MATRICES[ch].copy()


def _multiply_strings(s: str, t: str) -> str | None:
    out = []
    for a, b in zip(s, t):
        c = _TABLE[a, b]
        if c is None:
            return None
        out.append(c)
    return "".join(out)


def string_masks(s: str) -> tuple[int, int, int]:
    """``(care, required, flip)`` bit masks describing the action of ``s``.

    ``|j>`` survives iff ``j & care == required`` and is sent to ``j ^ flip``.
    """
    care = req = flip = 0
    n = len(s)
    for pos, ch in enumerate(s):
        bit = 1 << (n - 1 - pos)
        c, r, f = _ACTION[ch]
        if c:
            care |= bit
            if r:
                req |= bit
        if f:
            flip |= bit
    return care, req, flip


@functools.lru_cache(maxsize=32)
def _arange(n: int) -> np.ndarray:
    a = np.arange(1 << n, dtype=np.int64)
    a.flags.writeable = False
    return a


@functools.lru_cache(maxsize=4096)
def string_support(s: str) -> tuple[np.ndarray, np.ndarray]:
    """Source indices surviving ``s`` and their images."""
    care, req, flip = string_masks(s)
    idx = _arange(len(s))
    src = idx[(idx & care) == req] if care else idx
    dst = src ^ flip
    src.flags.writeable = False
    dst.flags.writeable = False
    return src, dst


def is_diagonal_string(s: str) -> bool:
    return "+" not in s and "-" not in s


def adjoint_string(s: str) -> str:
    return "".join(_ADJOINT[c] for c in s)


def _sort_key(s: str) -> tuple[int, ...]:
    return tuple(_RANK[c] for c in s)


class QubitOperator:
    """Immutable weighted sum of factor strings on ``n_qubits`` qubits."""

    __slots__ = ("_n", "_terms", "_hash")

    def __init__(self, n_qubits: int, terms: Mapping[str, complex] | Iterable[tuple[str, complex]] = ()):
        if n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        self._n = int(n_qubits)
        acc: dict[str, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for s, c in items:
            if len(s) != self._n:
                raise ValueError(f"factor string {s!r} has length {len(s)}, expected {self._n}")
            bad = set(s) - set(FACTORS)
            if bad:
                raise ValueError(f"invalid factor characters {sorted(bad)} in {s!r}")
            acc[s] = acc.get(s, 0j) + complex(c)
        kept = {s: c for s, c in acc.items() if abs(c) >= ZERO_TOL}
        self._terms = MappingProxyType({s: kept[s] for s in sorted(kept, key=_sort_key)})
        self._hash = None

    # construction helpers
    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "QubitOperator":
        return cls(n_qubits, {"I" * n_qubits: coeff})

    @classmethod
    def zero(cls, n_qubits: int) -> "QubitOperator":
        return cls(n_qubits)

    @classmethod
    def from_string(cls, s: str, coeff: complex = 1.0) -> "QubitOperator":
        return cls(len(s), {s: coeff})

    @classmethod
    def ketbra(cls, i: int, j: int, n_qubits: int, coeff: complex = 1.0) -> "QubitOperator":
        """``coeff·|i><j|`` as a single string."""
        chars = []
        for pos in range(n_qubits - 1, -1, -1):
            bi, bj = (i >> pos) & 1, (j >> pos) & 1
            chars.append({(0, 0): "0", (1, 1): "1", (1, 0): "+", (0, 1): "-"}[bi, bj])
        return cls(n_qubits, {"".join(chars): coeff})

    @classmethod
    def diagonal(cls, values: np.ndarray) -> "QubitOperator":
        """Naive one-projector-per-node diagonal operator (no compression)."""
        values = np.asarray(values)
        n = int(values.size).bit_length() - 1
        if 1 << n != values.size:
            raise ValueError("diagonal length must be a power of two")
        terms = {}
        for j, v in enumerate(values):
            if v != 0:
                terms[format(j, f"0{n}b") if n else ""] = v
        return cls(n, terms)

    # basic access
    @property
    def n_qubits(self) -> int:
        return self._n

    @property
    def terms(self) -> Mapping[str, complex]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[str, complex]]:
        return iter(self._terms.items())

    def __repr__(self) -> str:
        return f"QubitOperator(n_qubits={self._n}, terms={len(self._terms)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QubitOperator):
            return NotImplemented
        return self._n == other._n and dict(self._terms) == dict(other._terms)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._n, tuple(self._terms.items())))
        return self._hash

    def allclose(self, other: "QubitOperator", atol: float = 1e-12) -> bool:
        if self._n != other._n:
            return False
        return all(abs(c) <= atol for _, c in (self - other))

    def coefficient(self, s: str) -> complex:
        return self._terms.get(s, 0j)

    # algebra
    def _check(self, other: "QubitOperator") -> None:
        if not isinstance(other, QubitOperator):
            raise TypeError(f"expected QubitOperator, got {type(other).__name__}")
        if other._n != self._n:
            raise ValueError(f"qubit-count mismatch: {self._n} vs {other._n}")

    def __add__(self, other: "QubitOperator") -> "QubitOperator":
        self._check(other)
        return QubitOperator(self._n, list(self._terms.items()) + list(other._terms.items()))

    def __sub__(self, other: "QubitOperator") -> "QubitOperator":
        return self + (-other)

    def __neg__(self) -> "QubitOperator":
        return self.scale(-1.0)

    def scale(self, k: complex) -> "QubitOperator":
        return QubitOperator(self._n, {s: k * c for s, c in self._terms.items()})

    def __mul__(self, k: complex) -> "QubitOperator":
        if isinstance(k, QubitOperator):
            return multiply(self, k)
        return self.scale(k)

    def __rmul__(self, k: complex) -> "QubitOperator":
        return self.scale(k)

    def __truediv__(self, k: complex) -> "QubitOperator":
        return self.scale(1.0 / k)

    def __matmul__(self, other: "QubitOperator") -> "QubitOperator":
        return multiply(self, other)

    def adjoint(self) -> "QubitOperator":
        return QubitOperator(self._n, {adjoint_string(s): np.conj(c) for s, c in self._terms.items()})

    @property
    def dag(self) -> "QubitOperator":
        return self.adjoint()

    def kron(self, other: "QubitOperator") -> "QubitOperator":
        """``self ⊗ other`` with ``self`` on the high qubits."""
        terms = []
        for s, a in self._terms.items():
            for t, b in other._terms.items():
                terms.append((s + t, a * b))
        return QubitOperator(self._n + other._n, terms)

    def power(self, k: int) -> "QubitOperator":
        out = QubitOperator.identity(self._n)
        for _ in range(k):
            out = out @ self
        return out

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return self.allclose(self.adjoint(), atol)

    def diagonal_part(self) -> "QubitOperator":
        return QubitOperator(self._n, {s: c for s, c in self._terms.items() if is_diagonal_string(s)})

    # numerics
    def dense(self) -> np.ndarray:
        """Full matrix; testing oracle only, capped at 12 qubits."""
        if self._n > DENSE_CAP:
            raise ValueError(f"dense realization capped at {DENSE_CAP} qubits, operator has {self._n}")
        dim = 1 << self._n
        out = np.zeros((dim, dim), dtype=complex)
        for s, c in self._terms.items():
            src, dst = string_support(s)
            out[dst, src] += c
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``Dense(self) @ v`` along the last axis of ``v`` without building the matrix."""
        v = np.asarray(v)
        if v.shape[-1] != 1 << self._n:
            raise ValueError(f"state length {v.shape[-1]} does not match {self._n} qubits")
        out = np.zeros(v.shape, dtype=complex)
        for s, c in self._terms.items():
            src, dst = string_support(s)
            # dst is injective on src, so fancy-index accumulation is safe
            out[..., dst] += c * v[..., src]
        return out

    def diagonal_values(self) -> np.ndarray:
        """Diagonal of the operator (off-diagonal strings ignored)."""
        diag = np.zeros(1 << self._n, dtype=complex)
        for s, c in self._terms.items():
            if is_diagonal_string(s):
                src, _ = string_support(s)
                diag[src] += c
        return diag

    # serialization
    def to_text(self) -> str:
        lines = []
        for s, c in self._terms.items():
            lines.append(f"({c.real:.17g},{c.imag:.17g}) {s}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "QubitOperator":
        terms = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            coeff, s = line.rsplit(" ", 1)
            re, im = coeff.strip("()").split(",")
            terms.append((s, complex(float(re), float(im))))
        if n_qubits is None:
            if not terms:
                raise ValueError("cannot infer qubit count from empty text")
            n_qubits = len(terms[0][0])
        return cls(n_qubits, terms)


def multiply(x: QubitOperator, y: QubitOperator) -> QubitOperator:
    """Operator product ``x·y`` computed string by string."""
    x._check(y)
    terms = []
    for s, a in x.terms.items():
        for t, b in y.terms.items():
            st = _multiply_strings(s, t)
            if st is not None:
                terms.append((st, a * b))
    return QubitOperator(x.n_qubits, terms)


def adjoint(x: QubitOperator) -> QubitOperator:
    return x.adjoint()


def hermitian_split(a: QubitOperator) -> tuple[QubitOperator, QubitOperator]:
    """Return ``(L, H)`` with ``L = (a + a†)/2``, ``H = (a − a†)/2i`` and ``a = L + iH``."""
    ad = a.adjoint()
    return (a + ad).scale(0.5), (a - ad).scale(-0.5j)


def apply_operator(x: QubitOperator, v: np.ndarray) -> np.ndarray:
    return x.apply(v)


def shift_minus(n_bits: int, periodic: bool = False) -> QubitOperator:
    """``S⁻ = Σ_j |j-1><j|``; ``periodic`` adds the wrap ``|2^n-1><0|``."""
    if n_bits < 1:
        raise ValueError("shift needs n_bits >= 1")
    terms = []
    for jp in range(1, n_bits + 1):
        terms.append(("I" * (n_bits - jp) + "-" + "+" * (jp - 1), 1.0))
    if periodic:
        terms.append(("+" * n_bits, 1.0))
    return QubitOperator(n_bits, terms)


def shift_plus(n_bits: int, periodic: bool = False) -> QubitOperator:
    """``S⁺ = (S⁻)†``."""
    return shift_minus(n_bits, periodic).adjoint()


def embed_axis(op: QubitOperator, axis: int, grid: Grid) -> QubitOperator:
    """Place an axis-local operator on ``axis`` with identities on the other axes."""
    if op.n_qubits != grid.nbits[axis]:
        raise ValueError(f"operator acts on {op.n_qubits} qubits but axis {axis} has {grid.nbits[axis]}")
    low = grid.offset(axis)
    high = grid.n_qubits - low - grid.nbits[axis]
    return QubitOperator(grid.n_qubits, {"I" * high + s + "I" * low: c for s, c in op})


def face_projector(axis: int, grid: Grid, upper: bool) -> QubitOperator:
    """Projector onto the nodes of the lower (``x_mu = 0``) or upper face of ``axis``."""
    ch = "1" if upper else "0"
    return embed_axis(QubitOperator.from_string(ch * grid.nbits[axis]), axis, grid)


def difference_operator(scheme: str, axis: int, grid: Grid, boundary: BoundarySpec | None = None) -> QubitOperator:
    """Finite-difference operator along ``axis``.

    Non-periodic axes use zero extension beyond the lattice; periodic axes
    wrap.  ``scheme`` is ``forward``, ``backward`` or ``central4``.
    """
    if not 0 <= axis < grid.d:
        raise ValueError(f"invalid axis {axis} for a {grid.d}-dimensional grid")
    periodic = boundary.periodic(axis) if boundary is not None else False
    nb = grid.nbits[axis]
    sm = shift_minus(nb, periodic)
    sp = sm.adjoint()
    eye = QubitOperator.identity(nb)
    h = grid.h
    if scheme == "forward":
        local = (sm - eye).scale(1.0 / h)
    elif scheme == "backward":
        local = (eye - sp).scale(1.0 / h)
    elif scheme == "central4":
        local = (-(sm @ sm) + sm.scale(8.0) - sp.scale(8.0) + sp @ sp).scale(1.0 / (12.0 * h))
    else:
        raise ValueError(f"unsupported difference scheme {scheme!r}")
    return embed_axis(local, axis, grid)


__all__ = [
    "FACTORS",
    "QubitOperator",
    "adjoint",
    "apply_operator",
    "difference_operator",
    "embed_axis",
    "face_projector",
    "hermitian_split",
    "is_diagonal_string",
    "multiply",
    "multiply_factors",
    "shift_minus",
    "shift_plus",
    "string_masks",
    "string_support",
]
