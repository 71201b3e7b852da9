"""Two-level minimization of piecewise-constant diagonal operators.

A region of equal coefficient value is a Boolean on-set over the node-index
bits.  Minimizing its sum-of-products cover and mapping each cube to a
projector string (0 -> σ00, 1 -> σ11, - -> I) gives a diagonal operator with
far fewer terms than one projector per node.  Because coefficients add,
the final cover must be disjoint; :func:`resolve_duplicates` enforces that.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import Grid, PiecewiseField
from .qubit_op import QubitOperator

log = logging.getLogger(__name__)

EXACT_MAX_BITS = 16
# prime generation grows like 3^k for dense k-dimensional on-sets
IMPLICANT_BUDGET = 200_000
COVER_NODE_BUDGET = 200_000


@dataclass(frozen=True)
class Cube:
    """Product term over ``{0, 1, -}``, most significant bit first."""

    bits: str
    value: float = 1.0

    def __post_init__(self) -> None:
        if set(self.bits) - set("01-"):
            raise ValueError(f"invalid cube {self.bits!r}")

    @property
    def n_bits(self) -> int:
        return len(self.bits)

    def masks(self) -> tuple[int, int]:
        """``(care, val)``: index ``j`` is covered iff ``j & care == val``."""
        care = val = 0
        n = len(self.bits)
        for pos, ch in enumerate(self.bits):
            bit = 1 << (n - 1 - pos)
            if ch != "-":
                care |= bit
                if ch == "1":
                    val |= bit
        return care, val

    @classmethod
    def from_masks(cls, care: int, val: int, n_bits: int, value: float = 1.0) -> "Cube":
        chars = []
        for pos in range(n_bits - 1, -1, -1):
            bit = 1 << pos
            chars.append("-" if not care & bit else ("1" if val & bit else "0"))
        return cls("".join(chars), value)

    def size(self) -> int:
        return 1 << self.bits.count("-")

    def indices(self) -> np.ndarray:
        care, val = self.masks()
        return _cube_indices(care, val, self.n_bits)

    def covers(self, j: int) -> bool:
        care, val = self.masks()
        return (j & care) == val

    def to_string(self) -> str:
        """Projector string for the operator (site 0 rightmost)."""
        return self.bits.replace("-", "I")

    def with_value(self, value: float) -> "Cube":
        return Cube(self.bits, value)


def _cube_indices(care: int, val: int, n_bits: int) -> np.ndarray:
    free = [b for b in range(n_bits) if not care >> b & 1]
    idx = np.array([val], dtype=np.int64)
    for b in free:
        idx = np.concatenate([idx, idx | (1 << b)])
    return np.sort(idx)


@dataclass(frozen=True)
class ImplicantCover:
    """Compressed diagonal: ``default + Σ cube.value`` over covering cubes."""

    n_bits: int
    cubes: tuple[Cube, ...]
    default: float

    def evaluate(self) -> np.ndarray:
        out = np.full(1 << self.n_bits, self.default, dtype=float)
        for c in self.cubes:
            out[c.indices()] += c.value
        return out

    def coverage_count(self) -> np.ndarray:
        cnt = np.zeros(1 << self.n_bits, dtype=int)
        for c in self.cubes:
            cnt[c.indices()] += 1
        return cnt

    def is_disjoint(self) -> bool:
        return bool(np.all(self.coverage_count() <= 1))

    def to_operator(self) -> QubitOperator:
        terms = [(c.to_string(), c.value) for c in self.cubes]
        if self.default != 0.0:
            terms.append(("I" * self.n_bits, self.default))
        return QubitOperator(self.n_bits, terms)

    def to_text(self) -> str:
        lines = [f"# default {self.default:.17g}"]
        lines += [f"{c.bits} {c.value:.17g}" for c in self.cubes]
        return "\n".join(lines) + "\n"


# --- exact minimization ------------------------------------------------------


class _Budget(Exception):
    pass


def _popcount(x: int) -> int:
    return bin(x).count("1")


def prime_implicants(on_set: Iterable[int], n_bits: int, budget: int = IMPLICANT_BUDGET) -> list[tuple[int, int]]:
    """All prime implicants as ``(care, val)`` pairs (Quine–McCluskey merging)."""
    full = (1 << n_bits) - 1
    current = {(m, 0) for m in on_set}  # (val, dash)
    primes: set[tuple[int, int]] = set()
    seen = len(current)
    while current:
        groups: dict[tuple[int, int], set[int]] = defaultdict(set)
        for v, d in current:
            groups[d, _popcount(v)].add(v)
        nxt: set[tuple[int, int]] = set()
        used: set[tuple[int, int]] = set()
        for (d, p), vals in groups.items():
            upper = groups.get((d, p + 1))
            if not upper:
                continue
            for v in vals:
                free = full & ~d & ~v
                while free:
                    bit = free & -free
                    free ^= bit
                    w = v | bit
                    if w in upper:
                        nxt.add((v, d | bit))
                        used.add((v, d))
                        used.add((w, d))
        primes |= current - used
        seen += len(nxt)
        if seen > budget:
            raise _Budget
        current = nxt
    return sorted(((full & ~d, v) for v, d in primes), key=lambda cv: (_popcount(cv[0]), cv))


def _minimum_cover(columns: list[int], universe: int, node_budget: int) -> tuple[list[int], bool]:
    """Minimum set cover of bitset ``universe`` by ``columns`` (branch and bound).

    Returns chosen column indices and whether optimality was proven.
    """
    # greedy upper bound
    greedy = []
    rem = universe
    while rem:
        best = max(range(len(columns)), key=lambda i: _popcount(columns[i] & rem))
        greedy.append(best)
        rem &= ~columns[best]
    best_sol = list(greedy)
    if len(best_sol) <= 1:
        return best_sol, True
    max_cover = max(_popcount(c) for c in columns)
    by_bit: dict[int, list[int]] = defaultdict(list)
    u = universe
    while u:
        b = u & -u
        u ^= b
        for i, c in enumerate(columns):
            if c & b:
                by_bit[b].append(i)
    nodes = 0
    proven = True

    def search(rem: int, chosen: list[int]) -> None:
        nonlocal best_sol, nodes, proven
        if not rem:
            if len(chosen) < len(best_sol):
                best_sol = list(chosen)
            return
        nodes += 1
        if nodes > node_budget:
            proven = False
            return
        if len(chosen) + math.ceil(_popcount(rem) / max_cover) >= len(best_sol):
            return
        # branch on the hardest-to-cover element
        r = rem
        pick_opts = None
        while r:
            b = r & -r
            r ^= b
            opts = by_bit[b]
            if pick_opts is None or len(opts) < len(pick_opts):
                pick_opts = opts
                if len(opts) == 1:
                    break
        for i in sorted(pick_opts, key=lambda i: -_popcount(columns[i] & rem)):
            chosen.append(i)
            search(rem & ~columns[i], chosen)
            chosen.pop()
            if nodes > node_budget:
                return

    search(universe, [])
    return best_sol, proven


def _exact_cover(on_set: list[int], n_bits: int) -> tuple[list[Cube], bool]:
    primes = prime_implicants(on_set, n_bits)
    pos = {m: i for i, m in enumerate(on_set)}
    columns = []
    for care, val in primes:
        mask = 0
        for m in _cube_indices(care, val, n_bits):
            mask |= 1 << pos[int(m)]
        columns.append(mask)
    universe = (1 << len(on_set)) - 1
    # essential primes first
    chosen: list[int] = []
    covered = 0
    for i_bit in range(len(on_set)):
        b = 1 << i_bit
        owners = [i for i, c in enumerate(columns) if c & b]
        if len(owners) == 1 and owners[0] not in chosen:
            chosen.append(owners[0])
            covered |= columns[owners[0]]
    rem = universe & ~covered
    proven = True
    if rem:
        cand = [i for i in range(len(columns)) if i not in chosen and columns[i] & rem]
        sel, proven = _minimum_cover([columns[i] & rem for i in cand], rem, COVER_NODE_BUDGET)
        chosen += [cand[i] for i in sel]
    return [Cube.from_masks(*primes[i], n_bits) for i in chosen], proven


# --- heuristic minimization --------------------------------------------------


def _heuristic_cover(on_set: list[int], n_bits: int) -> list[Cube]:
    """Expand each uncovered minterm to a prime against the off-set, then drop redundant cubes."""
    member = np.zeros(1 << n_bits, dtype=bool)
    member[on_set] = True
    covered = np.zeros_like(member)
    cubes: list[tuple[int, int]] = []
    for m in on_set:
        if covered[m]:
            continue
        care, val = (1 << n_bits) - 1, m
        progress = True
        while progress:
            progress = False
            best = None
            for b in range(n_bits - 1, -1, -1):
                bit = 1 << b
                if not care & bit:
                    continue
                idx = _cube_indices(care & ~bit, val & ~bit, n_bits)
                if member[idx].all():
                    gain = int(np.count_nonzero(~covered[idx]))
                    if best is None or gain > best[0]:
                        best = (gain, bit)
            if best is not None:
                care &= ~best[1]
                val &= ~best[1]
                progress = True
        cubes.append((care, val))
        covered[_cube_indices(care, val, n_bits)] = True
    # irredundant: drop smallest cubes fully covered by the rest
    counts = np.zeros(1 << n_bits, dtype=int)
    idxs = [_cube_indices(c, v, n_bits) for c, v in cubes]
    for idx in idxs:
        counts[idx] += 1
    keep = [True] * len(cubes)
    for i in sorted(range(len(cubes)), key=lambda i: idxs[i].size):
        if np.all(counts[idxs[i]] >= 2):
            keep[i] = False
            counts[idxs[i]] -= 1
    return [Cube.from_masks(c, v, n_bits) for (c, v), k in zip(cubes, keep) if k]


def minimize_cover(on_set: Iterable[int], n_bits: int, method: str = "auto") -> list[Cube]:
    """Cover exactly ``on_set`` with few cubes.

    ``method`` is ``exact`` (Quine–McCluskey with minimum prime selection),
    ``heuristic`` (expand/irredundant), or ``auto``: exact up to 16 bits,
    falling back to the heuristic if prime generation exceeds its budget.
    """
    on = sorted({int(m) for m in on_set})
    if on and (on[0] < 0 or on[-1] >= 1 << n_bits):
        raise ValueError(f"on-set index out of range for {n_bits} bits")
    if not on:
        return []
    if len(on) == 1 << n_bits:
        return [Cube("-" * n_bits)]
    if method == "heuristic" or (method == "auto" and n_bits > EXACT_MAX_BITS):
        return _heuristic_cover(on, n_bits)
    if method not in ("auto", "exact"):
        raise ValueError(f"unknown minimization method {method!r}")
    try:
        cubes, proven = _exact_cover(on, n_bits)
    except _Budget:
        if method == "exact":
            raise RuntimeError("prime implicant budget exceeded") from None
        log.info("prime budget exceeded for %d minterms, using heuristic cover", len(on))
        return _heuristic_cover(on, n_bits)
    if not proven:
        log.info("minimum cover search hit node budget; cover may not be minimal")
    return cubes


# --- disjoint covers ---------------------------------------------------------


def _sharp(a: tuple[int, int], b: tuple[int, int], n_bits: int) -> list[tuple[int, int]]:
    """Disjoint pieces of cube ``a`` not covered by cube ``b``."""
    ca, va = a
    cb, vb = b
    if (va ^ vb) & ca & cb:
        return [a]  # already disjoint
    pieces = []
    care, val = ca, va
    for pos in range(n_bits - 1, -1, -1):
        bit = 1 << pos
        if cb & bit and not ca & bit:
            pieces.append((care | bit, val | (~vb & bit)))
            care |= bit
            val |= vb & bit
    return pieces


def resolve_duplicates(cubes: Sequence[Cube]) -> list[Cube]:
    """Rewrite ``cubes`` so every index is covered at most once.

    The covered index set is unchanged.  Earlier cubes keep their shape;
    later cubes are split around them.  Cost is quadratic in the cube count.
    """
    if not cubes:
        return []
    n = cubes[0].n_bits
    out: list[tuple[tuple[int, int], float]] = []
    for c in cubes:
        pieces = [c.masks()]
        for prev, _ in out:
            nxt = []
            for p in pieces:
                nxt.extend(_sharp(p, prev, n))
            pieces = nxt
            if not pieces:
                break
        out.extend((p, c.value) for p in pieces)
    return [Cube.from_masks(care, val, n, value) for (care, val), value in out]


# --- fields to operators -----------------------------------------------------

TRANSFORMS: dict[str, Callable[[float], float]] = {
    "identity": lambda x: x,
    "sqrt": math.sqrt,
    "inv_sqrt": lambda x: 1.0 / math.sqrt(x),
    "inv": lambda x: 1.0 / x,
}


def _transform(fn: str | Callable[[float], float], x: float, name: str) -> float:
    f = TRANSFORMS[fn] if isinstance(fn, str) else fn
    try:
        y = f(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"field {name}: transform undefined at value {x}") from exc
    if not math.isfinite(y):
        raise ValueError(f"field {name}: transform undefined at value {x}")
    return float(y)


def field_cover(
    f: PiecewiseField,
    n_bits: int,
    transform: str | Callable[[float], float] = "identity",
    method: str = "auto",
) -> ImplicantCover:
    """Minimized, disjoint implicant cover of ``transform(f)``."""
    default = _transform(transform, f.default, f.name)
    cubes: list[Cube] = []
    for value, idx in sorted(f.value_classes().items()):
        delta = _transform(transform, value, f.name) - default
        if delta == 0.0:
            continue
        cubes.extend(c.with_value(delta) for c in minimize_cover(idx, n_bits, method))
    return ImplicantCover(n_bits, tuple(resolve_duplicates(cubes)), default)


def field_to_operator(
    f: PiecewiseField,
    grid: Grid | int,
    transform: str | Callable[[float], float] = "identity",
    method: str = "auto",
) -> QubitOperator:
    n_bits = grid.n_qubits if isinstance(grid, Grid) else int(grid)
    return field_cover(f, n_bits, transform, method).to_operator()


def naive_term_count(f: PiecewiseField) -> int:
    """Terms of the one-projector-per-node representation (``|I| + 1``)."""
    return sum(len(i) for i in f.value_classes().values()) + 1


__all__ = [
    "Cube",
    "ImplicantCover",
    "field_cover",
    "field_to_operator",
    "minimize_cover",
    "naive_term_count",
    "prime_implicants",
    "resolve_duplicates",
]
