import numpy as np
import pytest

from lchspde.discretize import (
    Family,
    PdeProblem,
    assemble,
    coefficient_operators,
    decode_field,
    encode_initial_state,
    gershgorin_lower_bound,
    gradient_operator,
    observable_intensity,
    positive_shift,
    term_counts,
)
from lchspde.grid import BoundarySpec, Grid, PiecewiseField
from lchspde.qubit_op import QubitOperator, hermitian_split
from lchspde.reference import stencil_matrix

from problems import acoustic, heat, random_problem

def test_assembly_matches_stencil_loops(rng):
    for _ in range(30):
        p = random_problem(rng)
        assert np.allclose(assemble(p).dense(), stencil_matrix(p), atol=1e-12)


def test_heat_is_hermitian_psd():
    for nb in [(3,), (2, 2), (4,)]:
        a = assemble(heat(nb))
        l, h = hermitian_split(a)
        assert len(h) == 0
        assert np.linalg.eigvalsh(l.dense())[0] > -1e-10


def test_heat_matches_laplacian_form():
    p = heat((3,), kappa=0.1)
    g = p.grid
    from lchspde.qubit_op import difference_operator

    dp = difference_operator("forward", 0, g).dense()
    dm = difference_operator("backward", 0, g).dense()
    expect = -0.05 * (dp @ dm + dm @ dp)
    # Dirichlet faces add kappa/2 on the two end nodes
    expect[0, 0] += 0.05
    expect[-1, -1] += 0.05
    assert np.allclose(assemble(p).dense(), expect)


def test_acoustic_is_anti_hermitian():
    c = np.where(np.arange(32) % 5 == 0, 10.0, 1.0)
    a = assemble(acoustic((3, 2), c))
    l, h = hermitian_split(a)
    assert np.allclose(l.dense(), 0, atol=1e-12)
    assert len(h) > 0


def test_natural_second_order_boundaries_without_corrections():
    # Dirichlet on the lower face and Neumann on the upper face need no correction strings
    p = acoustic((3,))
    from lchspde.discretize import forward_operator
    from lchspde.qubit_op import difference_operator

    assert forward_operator(p, 0).allclose(difference_operator("forward", 0, p.grid, p.boundary))
    assert gradient_operator(p, 0).allclose(difference_operator("backward", 0, p.grid, p.boundary))


def test_coefficient_operators_are_exact(rng):
    p = random_problem(rng, "second_order")
    ops = coefficient_operators(p)
    assert np.allclose(ops["rho_inv"].diagonal_values(), 1 / p.values("rho"))
    assert np.allclose(ops["kappa_sqrt"].diagonal_values(), np.sqrt(p.values("kappa")))
    counts = term_counts(p, ops)
    assert all(m <= n for n, m in counts.values())


def test_first_order_upwind_split(rng):
    p = random_problem(rng, "first_order")
    ops = coefficient_operators(p)
    b = p.values("beta0")
    assert np.allclose(ops["beta0_plus"].diagonal_values(), np.maximum(b, 0))
    assert np.allclose(ops["beta0_minus"].diagonal_values(), np.minimum(b, 0))


def test_problem_validation():
    g = Grid((2,))
    bc = BoundarySpec.uniform(1, "neumann")
    with pytest.raises(ValueError, match="rho"):
        PdeProblem("second_order", g, bc, {"rho": PiecewiseField.constant(0.0)})
    with pytest.raises(ValueError, match="kappa"):
        PdeProblem("first_order", g, bc, {"kappa": PiecewiseField.constant(-1.0)})
    with pytest.raises(ValueError, match="integer"):
        PdeProblem("first_order", g, bc, {}, T=1.0, tau=0.3)
    with pytest.raises(ValueError, match="not used"):
        PdeProblem("first_order", g, bc, {"rho": PiecewiseField.constant(1.0)})
    with pytest.raises(ValueError):
        PdeProblem("first_order", g, BoundarySpec.uniform(2, "neumann"), {})
    with pytest.raises(ValueError, match="grid"):
        Grid((0, 3))


def test_layout():
    p = acoustic((3, 2))
    lay = p.layout
    assert lay.block_qubits == 2 and lay.n_blocks == 4 and lay.dim == 4 * 32
    assert heat((3,)).layout.dim == 8


def test_encode_decode_round_trip(rng):
    p = random_problem(rng, "second_order")
    n = p.grid.n_nodes
    u0 = rng.normal(size=n)
    v0 = rng.normal(size=n)
    w, norm = encode_initial_state(p, u0, v0)
    assert norm == pytest.approx(np.linalg.norm(w))
    assert np.allclose(decode_field(w, p, "udot"), v0)
    if np.all(p.values("alpha") > 0):
        assert np.allclose(decode_field(w, p, "u"), u0)
    else:
        with pytest.raises(ValueError, match="vanishes"):
            decode_field(w, p, "u")
    grad = gradient_operator(p, 0).apply(u0)
    assert np.allclose(decode_field(w, p, "grad", 0), grad)


def test_encode_checks_inputs():
    p = acoustic((2,))
    with pytest.raises(ValueError):
        encode_initial_state(p, np.zeros(4))
    with pytest.raises(ValueError):
        encode_initial_state(heat((2,)), np.zeros(4), np.zeros(4))
    with pytest.raises(ValueError):
        encode_initial_state(p, np.zeros(3), np.zeros(3))


def test_positive_shift():
    a = QubitOperator.diagonal(np.array([-0.5, 1.0, 2.0, 0.0]))
    b, s = positive_shift(a)
    assert s == pytest.approx(0.5)
    assert np.linalg.eigvalsh(b.dense())[0] == pytest.approx(0.0, abs=1e-12)
    assert positive_shift(assemble(heat((3,))))[1] == 0.0
    assert gershgorin_lower_bound(a) <= -0.5


def test_intensity_observable(rng):
    c = np.where(np.arange(8) < 4, 1.0, 3.0)
    p = acoustic((3,), c)
    w = rng.normal(size=p.layout.dim) + 1j * rng.normal(size=p.layout.dim)
    region = [1, 2, 5]
    chi = np.zeros(8)
    chi[region] = 1
    o = np.zeros(p.layout.dim)
    o[:8] = c * chi * c
    expect = float(np.real(np.vdot(w, o * w)))
    assert observable_intensity(w, region, PiecewiseField.from_array(c), p) == pytest.approx(expect)


def test_family_enum_accepts_strings():
    assert heat().family is Family.FIRST_ORDER
