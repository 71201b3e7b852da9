"""Tensor trains for the LCU coefficient state.

Vector cores have shape ``(r_left, 2, r_right)``; ``cores[0]`` is the most
significant bit, so a C-order reshape of the dense vector matches the
binary index ``a = (a_{n-1} ... a_0)_2``.  Operator cores have shape
``(r_left, 2_out, 2_in, r_right)``.

The coefficient state ``Σ_a sqrt(c_a)|a>`` with ``c_a = 2^-nf / π(1 + k_a²)``
is reached without touching the dense vector: exact trains for ``k`` and
``1 + k²``, a Newton iteration for the square root, and one more linear
solve for the reciprocal.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

DENSE_MAX_SITES = 16


class ConvergenceError(RuntimeError):
    """Solver failure; carries the best iterate and its residual."""

    def __init__(self, msg: str, best=None, residual: float = math.inf):
        super().__init__(msg)
        self.best = best
        self.residual = residual


# --- integration points ------------------------------------------------------


def integration_point(a: int, n_anc: int, n_frac: int) -> float:
    """Signed fixed-point value of ``a``: the top bit carries ``-2^(n_anc-1)``."""
    if not 0 <= a < 1 << n_anc:
        raise ValueError(f"integration index {a} out of range for {n_anc} ancillas")
    if n_frac < 0:
        raise ValueError("n_frac must be non-negative")
    top = (a >> (n_anc - 1)) & 1
    low = a & ((1 << (n_anc - 1)) - 1)
    return (low - top * (1 << (n_anc - 1))) * 2.0**-n_frac


def integration_points(n_anc: int, n_frac: int) -> np.ndarray:
    return np.array([integration_point(a, n_anc, n_frac) for a in range(1 << n_anc)])


def lchs_weights(n_anc: int, n_frac: int) -> np.ndarray:
    """Rectangle-rule weights ``c_a = 2^-nf / (π (1 + k_a²))``."""
    k = integration_points(n_anc, n_frac)
    return 2.0**-n_frac / (np.pi * (1 + k * k))


def exact_coefficient_state(n_anc: int, n_frac: int) -> np.ndarray:
    amp = np.sqrt(lchs_weights(n_anc, n_frac))
    return amp / np.linalg.norm(amp)


# --- trains ------------------------------------------------------------------


@dataclass
class TensorTrain:
    """Tensor-train (MPS) vector."""

    cores: list
    canonical: str = "none"  # none | left | right | mixed:<site>

    def __post_init__(self) -> None:
        self.cores = [np.asarray(c) for c in self.cores]
        if not self.cores:
            raise ValueError("a train needs at least one core")
        if self.cores[0].shape[0] != 1 or self.cores[-1].shape[2] != 1:
            raise ValueError("boundary bonds must be 1")
        for a, b in zip(self.cores, self.cores[1:]):
            if a.ndim != 3 or a.shape[2] != b.shape[0]:
                raise ValueError(f"bond mismatch {a.shape} -> {b.shape}")

    @property
    def n_sites(self) -> int:
        return len(self.cores)

    @property
    def bonds(self) -> list[int]:
        """Bond dimension at each internal cut."""
        return [c.shape[2] for c in self.cores[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bonds, default=1)

    @property
    def dtype(self):
        return np.result_type(*self.cores)

    def copy(self) -> "TensorTrain":
        return TensorTrain([c.copy() for c in self.cores], self.canonical)

    def to_dense(self) -> np.ndarray:
        if self.n_sites > DENSE_MAX_SITES:
            raise ValueError(f"dense contraction capped at {DENSE_MAX_SITES} sites")
        out = self.cores[0].reshape(2, -1)
        for c in self.cores[1:]:
            out = (out @ c.reshape(c.shape[0], -1)).reshape(-1, c.shape[2])
        return out.reshape(-1)

    def entry(self, a: int) -> complex:
        n = self.n_sites
        v = np.ones((1,))
        for pos, c in enumerate(self.cores):
            v = v @ c[:, (a >> (n - 1 - pos)) & 1, :]
        return v[0]

    @classmethod
    def from_dense(cls, v: np.ndarray, max_rank: int | None = None, tol: float = 0.0) -> "TensorTrain":
        """Successive SVD factorization (left-canonical result)."""
        v = np.asarray(v)
        n = int(v.size).bit_length() - 1
        if 1 << n != v.size or n < 1:
            raise ValueError("vector length must be a power of two >= 2")
        cores = []
        rest = v.reshape(1, -1)
        r = 1
        for _ in range(n - 1):
            m = rest.reshape(r * 2, -1)
            u, s, vt = np.linalg.svd(m, full_matrices=False)
            k = _rank(s, max_rank, tol)
            cores.append(u[:, :k].reshape(r, 2, k))
            rest = s[:k, None] * vt[:k]
            r = k
        cores.append(rest.reshape(r, 2, 1))
        return cls(cores, "left")

    @classmethod
    def product(cls, vectors: Sequence[Sequence[float]]) -> "TensorTrain":
        return cls([np.asarray(v).reshape(1, 2, 1) for v in vectors])

    @classmethod
    def ones(cls, n: int) -> "TensorTrain":
        return cls.product([[1.0, 1.0]] * n)

    @classmethod
    def random(cls, n: int, rank: int, rng: np.random.Generator, complex_: bool = False) -> "TensorTrain":
        ranks = [1] + [min(rank, 2 ** min(i, n - i)) for i in range(1, n)] + [1]
        cores = []
        for i in range(n):
            shape = (ranks[i], 2, ranks[i + 1])
            c = rng.standard_normal(shape)
            if complex_:
                c = c + 1j * rng.standard_normal(shape)
            cores.append(c)
        return cls(cores)

    # arithmetic
    def scale(self, k: complex) -> "TensorTrain":
        cores = [c.copy() for c in self.cores]
        cores[0] = cores[0] * k
        return TensorTrain(cores)

    def __add__(self, other: "TensorTrain") -> "TensorTrain":
        return tt_add(self, other)

    def __sub__(self, other: "TensorTrain") -> "TensorTrain":
        return tt_add(self, other.scale(-1.0))

    def dot(self, other: "TensorTrain") -> complex:
        """``<self, other>`` with ``self`` conjugated."""
        env = np.ones((1, 1))
        for a, b in zip(self.cores, other.cores):
            env = np.einsum("pq,pil,qim->lm", env, a.conj(), b)
        return env[0, 0]

    def norm(self) -> float:
        """Norm after a QR sweep; accurate even for nearly cancelling sums."""
        c = self.cores[0]
        for nxt in self.cores[1:]:
            r0, _, r1 = c.shape
            q, r = np.linalg.qr(c.reshape(r0 * 2, r1))
            c = np.einsum("ab,bic->aic", r, nxt)
        return float(np.linalg.norm(c))

    # serialization
    def to_text(self) -> str:
        lines = [f"# tensor-train n_sites={self.n_sites} bonds={','.join(map(str, self.bonds))}"]
        for i, c in enumerate(self.cores):
            lines.append(f"core {i} {c.shape[0]} {c.shape[1]} {c.shape[2]}")
            flat = np.asarray(c, dtype=complex).reshape(-1)
            lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in flat)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TensorTrain":
        cores = []
        it = iter(line for line in text.splitlines() if line.strip() and not line.startswith("#"))
        for line in it:
            tag, _, r0, p, r1 = line.split()
            if tag != "core":
                raise ValueError(f"unexpected line {line!r}")
            shape = (int(r0), int(p), int(r1))
            vals = []
            for _ in range(int(np.prod(shape))):
                re, im = next(it).split()
                vals.append(complex(float(re), float(im)))
            arr = np.array(vals).reshape(shape)
            if not np.any(arr.imag):
                arr = arr.real
            cores.append(arr)
        return cls(cores)


def _rank(s: np.ndarray, max_rank: int | None, tol: float) -> int:
    if s.size == 0:
        return 1
    keep = s.size
    if tol > 0:
        # drop the smallest values while their total stays below tol·‖s‖
        tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]
        keep = int(np.sum(tail > tol * np.linalg.norm(s)))
    if max_rank is not None:
        keep = min(keep, max_rank)
    return max(keep, 1)


def tt_add(x: TensorTrain, y: TensorTrain) -> TensorTrain:
    if x.n_sites != y.n_sites:
        raise ValueError("site count mismatch")
    n = x.n_sites
    if n == 1:
        return TensorTrain([x.cores[0] + y.cores[0]])
    dt = np.result_type(x.dtype, y.dtype)
    cores = []
    for i, (a, b) in enumerate(zip(x.cores, y.cores)):
        if i == 0:
            cores.append(np.concatenate([a, b], axis=2).astype(dt))
        elif i == n - 1:
            cores.append(np.concatenate([a, b], axis=0).astype(dt))
        else:
            c = np.zeros((a.shape[0] + b.shape[0], 2, a.shape[2] + b.shape[2]), dtype=dt)
            c[: a.shape[0], :, : a.shape[2]] = a
            c[a.shape[0]:, :, a.shape[2]:] = b
            cores.append(c)
    return TensorTrain(cores)


def hadamard(x: TensorTrain, y: TensorTrain) -> TensorTrain:
    """Elementwise product; bonds multiply."""
    cores = []
    for a, b in zip(x.cores, y.cores):
        c = np.einsum("aib,cid->acibd", a, b)
        cores.append(c.reshape(a.shape[0] * b.shape[0], 2, a.shape[2] * b.shape[2]))
    return TensorTrain(cores)


def left_orthogonalize(t: TensorTrain) -> TensorTrain:
    cores = [c.copy() for c in t.cores]
    for i in range(len(cores) - 1):
        r0, _, r1 = cores[i].shape
        q, r = np.linalg.qr(cores[i].reshape(r0 * 2, r1))
        cores[i] = q.reshape(r0, 2, q.shape[1])
        cores[i + 1] = np.einsum("ab,bic->aic", r, cores[i + 1])
    return TensorTrain(cores, "left")


def right_canonicalize(t: TensorTrain, chi_cap: int | None = None, tol: float = 0.0) -> TensorTrain:
    """Right-orthonormal cores (all but the first), optionally truncated.

    With a cap, the train is first left-orthogonalized so every SVD sees the
    exact Schmidt spectrum of its cut.
    """
    src = left_orthogonalize(t) if (chi_cap is not None or tol > 0) else t
    cores = [c.copy() for c in src.cores]
    for i in range(len(cores) - 1, 0, -1):
        r0, _, r1 = cores[i].shape
        m = cores[i].reshape(r0, 2 * r1)
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        k = _rank(s, chi_cap, tol) if (chi_cap is not None or tol > 0) else s.size
        cores[i] = vt[:k].reshape(k, 2, r1)
        cores[i - 1] = np.einsum("aib,bc->aic", cores[i - 1], u[:, :k] * s[:k])
    return TensorTrain(cores, "right")


def round_train(t: TensorTrain, max_rank: int | None = None, tol: float = 1e-14) -> TensorTrain:
    return right_canonicalize(t, max_rank, tol)


def is_right_canonical(t: TensorTrain, atol: float = 1e-10) -> bool:
    for c in t.cores[1:]:
        m = c.reshape(c.shape[0], -1)
        if not np.allclose(m @ m.conj().T, np.eye(c.shape[0]), atol=atol):
            return False
    return True


# --- operators ---------------------------------------------------------------


@dataclass
class TrainOperator:
    cores: list

    def __post_init__(self) -> None:
        self.cores = [np.asarray(c) for c in self.cores]
        for a, b in zip(self.cores, self.cores[1:]):
            if a.shape[3] != b.shape[0]:
                raise ValueError("operator bond mismatch")

    @property
    def n_sites(self) -> int:
        return len(self.cores)

    @classmethod
    def identity(cls, n: int) -> "TrainOperator":
        return cls([np.eye(2).reshape(1, 2, 2, 1) for _ in range(n)])

    @classmethod
    def diag(cls, v: TensorTrain) -> "TrainOperator":
        """``diag(v)``: each core lifted to ``W[b, a, a', b'] = V[b, a, b'] δ(a, a')``."""
        cores = []
        for c in v.cores:
            w = np.zeros((c.shape[0], 2, 2, c.shape[2]), dtype=c.dtype)
            w[:, 0, 0, :] = c[:, 0, :]
            w[:, 1, 1, :] = c[:, 1, :]
            cores.append(w)
        return cls(cores)

    def apply(self, x: TensorTrain) -> TensorTrain:
        cores = []
        for a, b in zip(self.cores, x.cores):
            c = np.einsum("aijb,cjd->acibd", a, b)
            cores.append(c.reshape(a.shape[0] * b.shape[0], 2, a.shape[3] * b.shape[2]))
        return TensorTrain(cores)

    def to_dense(self) -> np.ndarray:
        if self.n_sites > 12:
            raise ValueError("dense operator capped at 12 sites")
        out = self.cores[0].reshape(2, 2, -1)
        for c in self.cores[1:]:
            out = np.einsum("ija,aklb->ikjlb", out, c)
            out = out.reshape(out.shape[0] * 2, out.shape[2] * 2, -1)
        return out[:, :, 0]


# --- analytic trains ---------------------------------------------------------


def k_train(n_anc: int, n_frac: int) -> TensorTrain:
    """Exact train of ``Σ_a k_a |a>`` with bond dimension ``n_anc``.

    Bond channel ``b`` carries the bit weight of site ``b`` (counted from the
    least significant bit); every other site passes a factor 1.
    """
    n = n_anc
    if n < 2:
        raise ValueError("n_anc must be at least 2")
    cores = []
    # most significant site: the sign bit
    first = np.ones((1, 2, n))
    first[0, 0, n - 1] = 0.0
    first[0, 1, n - 1] = -(2.0 ** (n - 1 - n_frac))
    cores.append(first)
    for m in range(n - 1, 1, -1):  # sites m = n-1 .. 2, bit a_{m-1}
        c = np.zeros((n, 2, n))
        for b in range(n):
            c[b, :, b] = 1.0
        c[m - 1, 0, m - 1] = 0.0
        c[m - 1, 1, m - 1] = 2.0 ** (m - 1 - n_frac)
        cores.append(c)
    last = np.ones((n, 2, 1))
    last[0, 0, 0] = 0.0
    last[0, 1, 0] = 2.0**-n_frac
    cores.append(last)
    return TensorTrain(cores)


def one_plus_k_squared_train(n_anc: int, n_frac: int) -> TensorTrain:
    """Exact train of ``Σ_a (1 + k_a²)|a>``: Kronecker-squared channels plus a constant one."""
    kt = k_train(n_anc, n_frac)
    n = n_anc
    nn = n * n
    cores = []
    for pos, c in enumerate(kt.cores):
        sq = np.einsum("aib,cid->acibd", c, c).reshape(c.shape[0] ** 2, 2, c.shape[2] ** 2)
        if pos == 0:
            s = np.zeros((1, 2, nn + 1))
            s[:, :, :nn] = sq
            s[0, :, nn] = 1.0
        elif pos == len(kt.cores) - 1:
            s = np.zeros((nn + 1, 2, 1))
            s[:nn] = sq
            s[nn, :, 0] = 1.0
        else:
            s = np.zeros((nn + 1, 2, nn + 1))
            s[:nn, :, :nn] = sq
            s[nn, :, nn] = 1.0
        cores.append(s)
    return TensorTrain(cores)


# --- MALS --------------------------------------------------------------------


@dataclass
class SolveReport:
    residual: float
    sweeps: int
    converged: bool
    history: list = field(default_factory=list)


def residual_norm(op: TrainOperator, x: TensorTrain, b: TensorTrain) -> float:
    """``‖Ax - b‖ / ‖b‖`` evaluated in train form."""
    nb = b.norm()
    r = tt_add(op.apply(x), b.scale(-1.0)).norm()
    return r / nb if nb > 0 else r


def _left_env_op(env, x, a):
    return np.einsum("pbq,pil,bija,qjm->lam", env, x.conj(), a, x, optimize=True)


def _right_env_op(env, x, a):
    return np.einsum("lip,aijb,mjq,pbq->lam", x.conj(), a, x, env, optimize=True)


def _left_env_vec(env, x, b):
    return np.einsum("pc,pil,cig->lg", env, x.conj(), b, optimize=True)


def _right_env_vec(env, x, b):
    return np.einsum("lip,cig,pg->lc", x.conj(), b, env, optimize=True)


def mals_solve(
    op: TrainOperator,
    b: TensorTrain,
    max_rank: int,
    sweeps: int = 10,
    tol: float = 1e-6,
    x0: TensorTrain | None = None,
    raise_on_failure: bool = False,
) -> tuple[TensorTrain, SolveReport]:
    """Two-site alternating least squares for ``A x = b``.

    Each step solves the Galerkin-projected system for a pair of adjacent
    cores by dense least squares and splits the result by a truncated SVD
    (rank ``max_rank``).  Stops when the relative residual reaches ``tol`` or
    after ``sweeps`` forward-backward sweeps or once the iterate stops moving
    (the rank cap is binding).  The last iterate is returned either way.
    """
    n = b.n_sites
    if op.n_sites != n:
        raise ValueError("operator and right-hand side differ in site count")
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    dt = np.result_type(op.cores[0], b.dtype, float)
    if n == 1:
        a = op.cores[0][0, :, :, 0]
        x = TensorTrain([np.linalg.lstsq(a, b.cores[0][0, :, 0], rcond=None)[0].reshape(1, 2, 1)])
        res = residual_norm(op, x, b)
        return x, SolveReport(res, 1, res <= tol, [res])

    x = round_train(x0 if x0 is not None else b, max_rank)
    x = right_canonicalize(x)
    X = [c.astype(dt) for c in x.cores]
    A, B = op.cores, b.cores
    la = [None] * (n + 1)
    lb = [None] * (n + 1)
    ra = [None] * (n + 1)
    rb = [None] * (n + 1)
    la[0] = np.ones((1, 1, 1))
    lb[0] = np.ones((1, 1))
    ra[n] = np.ones((1, 1, 1))
    rb[n] = np.ones((1, 1))
    for k in range(n - 1, 0, -1):
        ra[k] = _right_env_op(ra[k + 1], X[k], A[k])
        rb[k] = _right_env_vec(rb[k + 1], X[k], B[k])

    def local(k):
        m = np.einsum("lae,aifb,bjgc,mcn->lijmefgn", la[k], A[k], A[k + 1], ra[k + 2], optimize=True)
        r0, r2 = la[k].shape[0], ra[k + 2].shape[0]
        dim = r0 * 4 * r2
        f = np.einsum("lc,cid,dje,me->lijm", lb[k], B[k], B[k + 1], rb[k + 2], optimize=True)
        y = np.linalg.lstsq(m.reshape(dim, dim), f.reshape(dim), rcond=None)[0]
        return y.reshape(r0 * 2, 2 * r2), r0, r2

    history = []
    done = 0
    prev = None
    for sweep in range(sweeps):
        for k in range(n - 1):
            y, r0, r2 = local(k)
            u, s, vt = np.linalg.svd(y, full_matrices=False)
            r = _rank(s, max_rank, 1e-15)
            X[k] = u[:, :r].reshape(r0, 2, r)
            X[k + 1] = (s[:r, None] * vt[:r]).reshape(r, 2, r2)
            la[k + 1] = _left_env_op(la[k], X[k], A[k])
            lb[k + 1] = _left_env_vec(lb[k], X[k], B[k])
        for k in range(n - 2, -1, -1):
            y, r0, r2 = local(k)
            u, s, vt = np.linalg.svd(y, full_matrices=False)
            r = _rank(s, max_rank, 1e-15)
            X[k] = (u[:, :r] * s[:r]).reshape(r0, 2, r)
            X[k + 1] = vt[:r].reshape(r, 2, r2)
            ra[k + 1] = _right_env_op(ra[k + 2], X[k + 1], A[k + 1])
            rb[k + 1] = _right_env_vec(rb[k + 2], X[k + 1], B[k + 1])
        done = sweep + 1
        cur = TensorTrain([c.copy() for c in X], "right")
        res = residual_norm(op, cur, b)
        history.append(res)
        if res <= tol:
            break
        # Galerkin sweeps minimize the energy functional, not the residual, so
        # a capped rank is detected by the iterate ceasing to move
        if prev is not None and tt_add(cur, prev.scale(-1.0)).norm() <= 1e-9 * cur.norm():
            break
        prev = cur
    best, best_res = cur, history[-1]
    report = SolveReport(best_res, done, best_res <= tol, history)
    if not report.converged:
        log.debug("MALS stopped at residual %.3e after %d sweeps (rank cap %d)", best_res, done, max_rank)
        if raise_on_failure:
            raise ConvergenceError("MALS did not reach the tolerance", best, best_res)
    return best, report


# --- Newton square root and coefficient train --------------------------------


@dataclass
class NewtonReport:
    iterations: int
    residual: float
    history: list
    converged: bool


def newton_sqrt(
    target: TensorTrain,
    max_rank: int = 10,
    tol: float = 1e-6,
    max_iter: int = 60,
    sweeps: int = 10,
    relative: bool = True,
) -> tuple[TensorTrain, NewtonReport]:
    """Solve ``diag(Ψ)Ψ = target`` by Newton steps ``2 diag(Ψ) δ = -F(Ψ)``.

    Starts from the all-ones train.  ``tol`` bounds ``‖F‖`` (relative to
    ``‖target‖`` when ``relative``).  Raises :class:`ConvergenceError` when
    the residual grows three iterations in a row.
    """
    psi = TensorTrain.ones(target.n_sites)
    scale = target.norm() if relative else 1.0
    history = []
    growth = 0
    best, best_res = psi, math.inf
    for it in range(max_iter + 1):
        f = tt_add(hadamard(psi, psi), target.scale(-1.0))
        res = f.norm() / scale
        history.append(res)
        if res < best_res:
            best, best_res = psi, res
        if res <= tol:
            return psi, NewtonReport(it, res, history, True)
        if len(history) > 1 and res > history[-2]:
            growth += 1
            if growth >= 3:
                raise ConvergenceError("Newton iteration diverged", best, best_res)
        else:
            growth = 0
        if it == max_iter:
            break
        op = TrainOperator.diag(psi.scale(2.0))
        rhs = round_train(f.scale(-1.0), None, 1e-15)
        delta, _ = mals_solve(op, rhs, max_rank, sweeps=sweeps, tol=min(1e-10, tol))
        psi = round_train(tt_add(psi, delta), max_rank, 1e-15)
    log.info("Newton stopped at ‖F‖=%.3e after %d iterations", best_res, max_iter)
    return best, NewtonReport(max_iter, best_res, history, False)


def solve_coefficient_train(
    psi: TensorTrain, n_frac: int, max_rank: int, sweeps: int = 10, tol: float = 1e-10
) -> tuple[TensorTrain, SolveReport]:
    """Solve ``diag(Ψ) Φ = sqrt(2^nf/π) Σ|a>`` at bond cap ``max_rank`` and normalize.

    The raw solution is ``2^nf`` times ``sqrt(c_a)``; normalization removes
    the constant.
    """
    rhs = TensorTrain.ones(psi.n_sites).scale(math.sqrt(2.0**n_frac / math.pi))
    phi, rep = mals_solve(TrainOperator.diag(psi), rhs, max_rank, sweeps=sweeps, tol=tol)
    phi = right_canonicalize(phi)
    return phi.scale(1.0 / phi.norm()), rep


def fidelity(x: TensorTrain | np.ndarray, y: np.ndarray) -> float:
    """``|<x, y>|² / (‖x‖²‖y‖²)``."""
    xv = x.to_dense() if isinstance(x, TensorTrain) else np.asarray(x)
    y = np.asarray(y)
    return float(abs(np.vdot(xv, y)) ** 2 / (np.vdot(xv, xv).real * np.vdot(y, y).real))


@dataclass
class CoefficientTrain:
    phi: TensorTrain
    psi: TensorTrain
    newton: NewtonReport
    solve: SolveReport
    fidelity: float | None


def build_coefficient_train(
    n_anc: int,
    n_frac: int,
    r_psi: int = 10,
    r_phi: int = 2,
    tol: float = 1e-6,
    sweeps: int = 10,
    max_iter: int = 60,
) -> CoefficientTrain:
    """Normalized train approximating ``Σ_a sqrt(c_a)|a> / sqrt(‖c‖₁)``."""
    if min(n_anc, r_psi, r_phi) < 1 or n_frac < 0:
        raise ValueError("coefficient oracle parameters must be positive")
    target = one_plus_k_squared_train(n_anc, n_frac)
    psi, nrep = newton_sqrt(target, r_psi, tol, max_iter=max_iter, sweeps=sweeps)
    phi, srep = solve_coefficient_train(psi, n_frac, r_phi, sweeps=sweeps)
    fid = fidelity(phi, exact_coefficient_state(n_anc, n_frac)) if n_anc <= DENSE_MAX_SITES else None
    return CoefficientTrain(phi, psi, nrep, srep, fid)


__all__ = [
    "CoefficientTrain",
    "ConvergenceError",
    "TensorTrain",
    "TrainOperator",
    "build_coefficient_train",
    "exact_coefficient_state",
    "fidelity",
    "hadamard",
    "integration_point",
    "integration_points",
    "is_right_canonical",
    "k_train",
    "lchs_weights",
    "left_orthogonalize",
    "mals_solve",
    "newton_sqrt",
    "one_plus_k_squared_train",
    "residual_norm",
    "right_canonicalize",
    "round_train",
    "solve_coefficient_train",
    "tt_add",
]
