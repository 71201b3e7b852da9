import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from lchspde.circuit import (
    Circuit,
    EvolutionBlock,
    Gate,
    H_GATE,
    TrotterPlan,
    apply_select_oracle,
    box_state_prep,
    check_dissipative,
    coefficient_oracle,
    complete_unitary,
    exp_group_apply,
    group_hermitian_pairs,
    lchs_circuit,
    mps_to_circuit_chi2,
    mps_to_circuit_layered,
    run_lchs,
    run_lchs_snapshots,
    select_oracle_blocks,
    slices_for,
    trotter_step,
)
from lchspde.discretize import assemble, positive_shift
from lchspde.mps import TensorTrain, build_coefficient_train, exact_coefficient_state, fidelity, integration_points, right_canonicalize
from lchspde.qubit_op import QubitOperator, hermitian_split
from lchspde.reference import lchs_quadrature_dense

from problems import heat, random_hermitian


def block_unitary(plan, t, slices=1):
    """Dense matrix of ``slices`` product-formula steps of total time ``t``."""
    dim = 1 << plan.n_qubits
    m = np.eye(dim, dtype=complex)
    for _ in range(slices):
        plan.step(m, t / slices)
    return m.T


def test_groups_sum_to_operator(rng):
    for _ in range(20):
        h = random_hermitian(rng, 3, 5)
        total = sum((g.operator(3) for g in group_hermitian_pairs(h)), QubitOperator.zero(3))
        assert total.allclose(h)


def test_groups_reject_non_hermitian():
    with pytest.raises(ValueError):
        group_hermitian_pairs(QubitOperator.from_string("+I"))


def test_groups_are_ordered_diagonal_first(rng):
    groups = group_hermitian_pairs(random_hermitian(rng, 3, 8))
    flags = [g.diagonal for g in groups]
    assert flags == sorted(flags, reverse=True)


def test_exp_group_is_exact(rng):
    for _ in range(20):
        h = random_hermitian(rng, 3, 3)
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        for g in group_hermitian_pairs(h):
            ref = scipy.linalg.expm(-0.7j * g.operator(3).dense()) @ v
            assert np.allclose(exp_group_apply(g, 0.7, v, 3), ref, atol=1e-12)


def test_trotter_commuting_terms_exact(rng):
    h = QubitOperator(3, {"0I1": 0.3, "1+I": 0.5, "1-I": 0.5})  # disjoint supports commute
    v = rng.normal(size=8).astype(complex)
    assert np.allclose(trotter_step(TrotterPlan(h), v, 1.3), scipy.linalg.expm(-1.3j * h.dense()) @ v, atol=1e-12)


@pytest.mark.parametrize("order,expected", [(1, 4.0), (2, 8.0)])
def test_trotter_local_error_order(rng, order, expected):
    h = random_hermitian(rng, 3, 6)
    plan = TrotterPlan(h, order)
    errs = []
    for t in (0.02, 0.01):
        errs.append(np.linalg.norm(block_unitary(plan, t) - scipy.linalg.expm(-1j * t * h.dense()), 2))
    assert errs[0] / errs[1] == pytest.approx(expected, rel=0.1)


def test_trotter_factor_count():
    h = QubitOperator(2, {"0I": 1.0, "+I": 0.5, "-I": 0.5, "I+": 0.2, "I-": 0.2})
    assert TrotterPlan(h, 1).factor_count() == 3
    assert TrotterPlan(h, 2).factor_count() == 5
    assert TrotterPlan(QubitOperator.zero(2)).is_zero


def test_trotter_step_is_unitary(rng):
    u = block_unitary(TrotterPlan(random_hermitian(rng, 3, 6)), 0.9)
    assert np.allclose(u.conj().T @ u, np.eye(8), atol=1e-12)


def test_gate_rejects_non_unitary():
    with pytest.raises(ValueError):
        Gate("bad", (0,), np.array([[1, 1], [0, 1]]))


def test_gate_high_bit_first():
    # CX with control q1 and target q0 flips bit 0 when bit 1 is set
    circ = Circuit(2).append(Gate("X", (1,), np.array([[0, 1], [1, 0]]))).append(
        Gate("CX", (1, 0), np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))
    )
    assert np.allclose(circ.run(), np.eye(4)[3])


def test_circuit_append_range_check():
    with pytest.raises(ValueError):
        Circuit(2).append(Gate("H", (2,), H_GATE))


def test_circuit_inverse(rng):
    h = random_hermitian(rng, 2, 4)
    circ = Circuit(3, n_system=2)
    circ.append(Gate("H", (2,), H_GATE)).append(EvolutionBlock("U", TrotterPlan(h), 0.4, control=2, slices=3))
    circ.append(Gate("H", (0,), H_GATE))
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert np.allclose(circ.inverse().run(circ.run(v)), v, atol=1e-12)


def test_first_order_block_has_no_inverse(rng):
    with pytest.raises(ValueError):
        EvolutionBlock("U", TrotterPlan(random_hermitian(rng, 2), 1), 0.1).inverse()


def test_counts_and_text():
    h = QubitOperator(1, {"+": 1.0, "-": 1.0, "0": 0.5})
    circ = Circuit(2, n_system=1).append(Gate("H", (1,), H_GATE)).append(EvolutionBlock("O", TrotterPlan(h), 0.5, 1, 2))
    assert circ.counts() == {"one_qubit": 1, "two_qubit": 0, "evolution_blocks": 1, "exponential_factors": 6}
    text = circ.to_text()
    assert text.startswith("# circuit n_qubits=2 n_system=1")
    assert "gate H q1" in text and "evolve O t=0.5 ctrl=q1 order=2 slices=2 factors=3" in text


def test_complete_unitary(rng):
    q, _ = np.linalg.qr(rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)))
    u = complete_unitary({0: q[:, 0], 2: q[:, 1]}, 4)
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    assert np.allclose(u[:, 2], q[:, 1])


def random_bond2_train(rng, n):
    cores = [rng.normal(size=(1 if i == 0 else 2, 2, 1 if i == n - 1 else 2)) for i in range(n)]
    t = TensorTrain(cores)
    return right_canonicalize(t.scale(1.0 / t.norm()))


def test_chi2_circuit_prepares_train(rng):
    for n in (1, 2, 3, 5):
        t = random_bond2_train(rng, n)
        assert np.allclose(mps_to_circuit_chi2(t).run(), t.to_dense().ravel(), atol=1e-12)


def test_chi2_circuit_offset(rng):
    t = random_bond2_train(rng, 3)
    out = mps_to_circuit_chi2(t, offset=2, n_qubits=5).run()
    # register sits on the high qubits, low qubits stay |00>
    assert np.allclose(out.reshape(8, 4)[:, 0], t.to_dense().ravel(), atol=1e-12)


def test_chi2_rejects_bad_trains(rng):
    t = random_bond2_train(rng, 4)
    with pytest.raises(ValueError, match="normalized"):
        mps_to_circuit_chi2(t.scale(2.0))
    cores = list(t.cores)
    cores[-1] = cores[-1] * 3.0
    with pytest.raises(ValueError, match="canonical"):
        mps_to_circuit_chi2(TensorTrain(cores))
    wide = TensorTrain.from_dense(rng.normal(size=(2,) * 6))
    wide = right_canonicalize(wide.scale(1.0 / wide.norm()))
    assert wide.max_bond > 2
    with pytest.raises(ValueError, match="exceeds 2"):
        mps_to_circuit_chi2(wide)


def test_layered_fidelity_improves():
    ct = build_coefficient_train(6, 1, r_psi=10, r_phi=4)
    target = exact_coefficient_state(6, 1)
    fids = [fidelity(mps_to_circuit_layered(ct.phi, k).run(), target) for k in (1, 2, 4)]
    assert all(b >= a - 1e-9 for a, b in zip(fids, fids[1:]))
    assert fids[-1] > 0.99


def test_coefficient_oracle_matches_rank2_train():
    ct = build_coefficient_train(6, 1, r_psi=10, r_phi=2)
    out = coefficient_oracle(ct.phi).run()
    assert fidelity(out, exact_coefficient_state(6, 1)) == pytest.approx(ct.fidelity, abs=1e-10)


def box_vector(ranges, nbits):
    shape = [1 << b for b in reversed(nbits)]
    v = np.zeros(shape)
    sl = tuple(slice(lo, hi + 1) for lo, hi in reversed(ranges))
    v[sl] = 1.0
    return v.ravel() / np.linalg.norm(v)


@pytest.mark.parametrize(
    "ranges", [[(6, 9)], [(14, 17)], [(0, 15)], [(4, 7)], [(5, 5)], [(2, 5)], [(30, 33)]]
)
def test_box_prep_one_axis(ranges):
    assert np.allclose(box_state_prep(ranges, [6]).run(), box_vector(ranges, [6]), atol=1e-12)


def test_box_prep_two_axes():
    ranges, nbits = [(6, 7), (6, 9)], [4, 4]
    circ = box_state_prep(ranges, nbits)
    assert np.allclose(circ.run(), box_vector(ranges, nbits), atol=1e-12)
    assert all(len(g.qubits) <= 2 for g in circ.ops)


def test_box_prep_block_register():
    out = box_state_prep([(0, 1)], [2], block=1, block_qubits=1).run()
    assert np.allclose(out, np.r_[0, 0, 0, 0, 1, 1, 0, 0] / np.sqrt(2))


@pytest.mark.parametrize("ranges", [[(0, 2)], [(1, 4)], [(3, 6)], [(6, 12)]])
def test_box_prep_rejects(ranges):
    with pytest.raises(ValueError):
        box_state_prep(ranges, [4])


def test_slices_for():
    assert slices_for(0.1, None) == 1
    assert slices_for(0.8, 0.4) == 2
    assert slices_for(-0.81, 0.4) == 3
    with pytest.raises(ValueError):
        slices_for(1.0, 0.0)


def test_select_oracle_times():
    plan = TrotterPlan(QubitOperator(1, {"1": 1.0}))
    blocks = select_oracle_blocks(plan, 0.1, 4, 1, 1)
    assert [b.time for b in blocks] == pytest.approx([0.05, 0.1, 0.2, -0.4])
    assert [b.control for b in blocks] == [1, 2, 3, 4]
    # the integration grid is the two's complement reading of the ancilla index
    k = integration_points(4, 1)
    assert k == pytest.approx([(a - 16 * (a >> 3)) / 2 for a in range(16)])


def select_branches(l_op, tau, n_anc, n_frac, v, max_dt=None):
    n = l_op.n_qubits
    out = []
    for a in range(1 << n_anc):
        psi = np.zeros(1 << (n + n_anc), dtype=complex)
        psi[a << n : (a + 1) << n] = v
        psi = apply_select_oracle(psi, TrotterPlan(l_op), tau, n_anc, n_frac, max_dt)
        out.append(psi.reshape(1 << n_anc, 1 << n))
    return out


def test_select_oracle_branches_within_trotter_bound(rng):
    n, n_anc, n_frac, tau = 2, 3, 1, 0.3
    l_op = random_hermitian(rng, n, 5)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    plan = TrotterPlan(l_op)
    blocks = select_oracle_blocks(plan, tau, n_anc, n_frac, n)
    block_err = [np.linalg.norm(block_unitary(plan, b.time) - scipy.linalg.expm(-1j * b.time * l_op.dense()), 2) for b in blocks]
    k = integration_points(n_anc, n_frac)
    for a, out in enumerate(select_branches(l_op, tau, n_anc, n_frac, v)):
        assert np.allclose(np.delete(out, a, axis=0), 0)  # the ancilla is never changed
        exact = scipy.linalg.expm(-1j * k[a] * tau * l_op.dense()) @ v
        bound = sum(e for m, e in enumerate(block_err) if a >> m & 1)
        assert np.linalg.norm(out[a] - exact) <= bound + 1e-12
    assert np.array_equal(select_branches(l_op, tau, n_anc, n_frac, v)[0][0], v)


def test_select_oracle_slicing_reduces_error(rng):
    l_op = random_hermitian(rng, 2, 6)
    v = np.eye(4)[1].astype(complex)
    k = integration_points(3, 0)
    a = 3
    exact = scipy.linalg.expm(-1j * k[a] * 0.5 * l_op.dense()) @ v
    coarse = select_branches(l_op, 0.5, 3, 0, v)[a][a]
    fine = select_branches(l_op, 0.5, 3, 0, v, max_dt=0.05)[a][a]
    assert np.linalg.norm(fine - exact) < 0.1 * np.linalg.norm(coarse - exact)


def test_check_dissipative():
    check_dissipative(QubitOperator(1, {"1": 1.0}))
    with pytest.raises(ValueError):
        check_dissipative(QubitOperator(1, {"1": -1.0}))


def test_lchs_zero_l_is_hamiltonian_simulation(rng):
    h = random_hermitian(rng, 2, 4)
    a = h.scale(1j)  # purely anti-Hermitian A, so L = 0
    assert len(hermitian_split(a)[0]) == 0
    ct = build_coefficient_train(4, 1, r_psi=10, r_phi=2)
    w0 = rng.normal(size=4) + 0j
    res = run_lchs(a, ct.phi, w0, 4, 1, 0.1, 10)
    plan = TrotterPlan(h)
    ref = w0.copy()
    for _ in range(10):
        plan.step(ref, 0.1)
    assert res.success_probability == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(res.solution, ref, atol=1e-12)
    assert np.linalg.norm(res.solution) == pytest.approx(np.linalg.norm(w0), rel=1e-12)


def test_snapshots_match_separate_runs(rng):
    a, shift = positive_shift(assemble(heat((3,), kappa=0.5)))
    ct = build_coefficient_train(4, 1, r_psi=10, r_phi=2)
    w0 = rng.normal(size=8)
    snaps = run_lchs_snapshots(a, ct.phi, w0, 4, 1, 0.1, [0, 3, 5], shift=shift)
    for k, s in zip([0, 3, 5], snaps):
        single = run_lchs(a, ct.phi, w0, 4, 1, 0.1, k, shift=shift)
        assert np.allclose(s.solution, single.solution, atol=1e-12)
        assert s.success_probability == pytest.approx(single.success_probability, abs=1e-12)
    assert snaps[-1].circuit is not None and snaps[0].circuit is None


def test_heat_1d_tracks_quadrature():
    # with a near-exact coefficient state and fine slicing the circuit follows the dense LCHS sum
    a, shift = positive_shift(assemble(heat((3,), kappa=0.5)))
    ct = build_coefficient_train(4, 1, r_psi=10, r_phi=4)
    w0 = np.eye(8)[3]
    res = run_lchs(a, ct.phi, w0, 4, 1, 0.05, 20, shift=shift, max_dt=0.05)
    l_op, h_op = hermitian_split(a)
    quad = lchs_quadrature_dense(l_op, h_op, 1.0, 4, 1, w0) * np.exp(shift)
    assert np.linalg.norm(res.solution - quad) / np.linalg.norm(quad) < 5e-3
    exact = scipy.linalg.expm(-a.dense()) @ w0 * np.exp(shift)
    assert np.linalg.norm(res.solution - exact) / np.linalg.norm(exact) < 0.1


def test_full_circuit_reproduces_run(rng):
    a, shift = positive_shift(assemble(heat((2,), kappa=0.5)))
    ct = build_coefficient_train(4, 1, r_psi=10, r_phi=2)
    prep = box_state_prep([(1, 2)], [2])
    w0 = np.r_[0, 1, 1, 0] * 3.0
    res = run_lchs(a, ct.phi, w0, 4, 1, 0.1, 4, prep=prep, shift=shift)
    out = lchs_circuit(a, ct.phi, 4, 1, 0.1, 4, prep=prep).run()
    assert np.allclose(out[:4], res.branch, atol=1e-12)


def test_run_rejects_bad_input():
    a = QubitOperator(1, {"1": 1.0})
    ct = build_coefficient_train(2, 0, r_psi=4, r_phi=2)
    with pytest.raises(ValueError):
        run_lchs(a, ct.phi, np.zeros(2), 2, 0, 0.1, 1)
    with pytest.raises(ValueError):
        run_lchs(a, ct.phi, np.ones(4), 2, 0, 0.1, 1)
    with pytest.raises(ValueError):
        run_lchs(a.scale(-1.0), ct.phi, np.ones(2), 2, 0, 0.1, 1)


seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(1, 3), st.floats(-2.0, 2.0))
def test_trotter_step_unitary_property(seed, n, t):
    rng = np.random.default_rng(seed)
    plan = TrotterPlan(random_hermitian(rng, n, 4))
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    assert np.linalg.norm(trotter_step(plan, v, t)) == pytest.approx(np.linalg.norm(v), rel=1e-12)


@given(seeds, st.integers(1, 3), st.integers(2, 4), st.integers(0, 2))
def test_select_zero_branch_identity_property(seed, n, n_anc, n_frac):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 0j
    out = select_branches(random_hermitian(rng, n, 3), 0.2, n_anc, n_frac, v)[0]
    assert np.array_equal(out[0], v)


@given(st.integers(2, 6), st.data())
def test_box_prep_aligned_property(nbits, data):
    k = data.draw(st.integers(0, nbits))
    lo = data.draw(st.integers(0, (1 << (nbits - k)) - 1)) << k
    ranges = [(lo, lo + (1 << k) - 1)]
    assert np.allclose(box_state_prep(ranges, [nbits]).run(), box_vector(ranges, [nbits]), atol=1e-12)
