import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from lchspde.discretize import assemble, decode_field, encode_initial_state
from lchspde.mps import lchs_weights
from lchspde.qubit_op import QubitOperator, hermitian_split
from lchspde.reference import (
    CapExceeded,
    TimeSeries,
    classical_fdm,
    difference_matrices,
    expm_multiply,
    lchs_quadrature_dense,
    norm_trace,
    stencil_matrix,
)

from problems import acoustic, heat, random_hermitian, random_problem


def test_expm_multiply_diagonal():
    m = np.diag([0.0, 1.0, 2.0])
    v = np.ones(3)
    assert np.allclose(expm_multiply(m, 0.5, v), np.exp(-0.5 * np.array([0, 1, 2])))


def test_expm_multiply_accepts_operators(rng):
    op = random_hermitian(rng, 2)
    v = rng.normal(size=4)
    assert np.allclose(expm_multiply(op, 0.3, v), scipy.linalg.expm(-0.3 * op.dense()) @ v)


def test_dense_cap():
    with pytest.raises(CapExceeded):
        expm_multiply(QubitOperator.identity(14), 1.0, np.zeros(1 << 14))


def test_quadrature_converges_with_ancillas(rng):
    a = assemble(heat((3,), kappa=0.5))
    l_op, h_op = hermitian_split(a)
    w0 = rng.normal(size=8)
    exact = scipy.linalg.expm(-a.dense()) @ w0
    errs = [np.linalg.norm(lchs_quadrature_dense(l_op, h_op, 1.0, n, 1, w0) - exact) for n in (4, 6, 8)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] / np.linalg.norm(exact) < 2e-2


def test_quadrature_at_zero_time(rng):
    a = assemble(heat((2,)))
    l_op, h_op = hermitian_split(a)
    w0 = rng.normal(size=4)
    out = lchs_quadrature_dense(l_op, h_op, 0.0, 4, 1, w0)
    assert np.allclose(out, lchs_weights(4, 1).sum() * w0)


def test_difference_matrices_periodic():
    p = heat((2,), bc="periodic")
    dp, dm = difference_matrices(p, 0)
    assert np.allclose(dp.sum(axis=1), 0) and np.allclose(dm.sum(axis=1), 0)
    assert np.allclose(dp, -dm.T)


def test_fdm_first_order_matches_exponential(rng):
    p = heat((3,), kappa=0.5)
    u0 = rng.normal(size=8)
    ts = classical_fdm(p, u0, None, [0.0, 0.5, 1.0], dt=1e-3)
    a = stencil_matrix(p)
    for t, s in zip(ts.times, ts.states):
        ref = scipy.linalg.expm(-t * a) @ u0
        assert np.linalg.norm(s - ref) <= 2e-3 * np.linalg.norm(u0)


def test_fdm_second_order_matches_exponential(rng):
    p = acoustic((2, 2))
    u0, v0 = np.zeros(16), rng.normal(size=16)
    w0, _ = encode_initial_state(p, u0, v0)
    ts = classical_fdm(p, u0, v0, [0.0, 1.0], dt=1e-3)
    a = assemble(p).dense()
    for t, rate in zip(ts.times, ts.rates):
        ref = decode_field(scipy.linalg.expm(-t * a) @ w0, p, "udot").real
        assert np.linalg.norm(rate - ref) <= 1e-4 * np.linalg.norm(v0)


def test_fdm_rejects_off_grid_times():
    with pytest.raises(ValueError):
        classical_fdm(heat((2,)), np.ones(4), None, [0.15], dt=0.1)


def test_fdm_warns_when_unstable():
    with pytest.warns(RuntimeWarning):
        classical_fdm(heat((3,), kappa=5.0), np.ones(8), None, [1.0], dt=1.0)


def test_norm_trace_conservative_and_dissipative(rng):
    w_ac = rng.normal(size=1 << assemble(acoustic((2, 2))).n_qubits)
    tr = norm_trace(assemble(acoustic((2, 2))), w_ac, 5.0)
    assert np.allclose(tr.norms, tr.norms[0], rtol=1e-10)
    tr = norm_trace(assemble(heat((3,))), rng.normal(size=8), 5.0)
    assert np.all(np.diff(tr.norms) <= 1e-12)


def test_time_series_csv():
    ts = TimeSeries([0.0, 0.5], [np.zeros(2), np.ones(2)], [0.0, 1.5])
    assert ts.to_csv() == "t,norm\n0,0\n0.5,1.5\n"
    with pytest.raises(ValueError):
        TimeSeries([0.0], [], [1.0])


@given(st.integers(0, 2**32 - 1))
def test_heat_norm_trace_non_increasing_property(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, "first_order")
    f = {k: v for k, v in p.fields.items() if not k.startswith("beta")}
    p = type(p)(p.family, p.grid, p.boundary, f, 1.0, 0.1)
    a = assemble(p)
    tr = norm_trace(a, rng.normal(size=1 << a.n_qubits), 3.0, samples=11)
    assert np.all(np.diff(tr.norms) <= 1e-12 * tr.norms[0])
