import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lchspde.grid import Grid, PiecewiseField
from lchspde.logicmin import (
    Cube,
    ImplicantCover,
    field_cover,
    field_to_operator,
    minimize_cover,
    naive_term_count,
    prime_implicants,
)


def covered(cubes, n_bits):
    out = np.zeros(1 << n_bits, dtype=int)
    for c in cubes:
        out[c.indices()] += 1
    return out


def test_cube_string_and_indices():
    c = Cube("1-0")
    assert sorted(c.indices().tolist()) == [4, 6]
    assert c.to_string() == "1I0"
    assert c.size() == 2


def test_aligned_box_is_one_cube():
    g = Grid((4, 4))
    idx = g.box_indices([(4, 7), (8, 15)])
    cubes = minimize_cover(idx.tolist(), 8)
    assert len(cubes) == 1
    f = PiecewiseField(1.0, ((tuple(idx.tolist()), 10.0),))
    assert len(field_to_operator(f, g)) == 2


def test_all_one_field_is_identity():
    f = PiecewiseField.constant(1.0)
    op = field_to_operator(f, 4)
    assert len(op) == 1 and naive_term_count(f) == 1


def test_checkerboard_exact():
    n = 4
    on = [j for j in range(16) if (j ^ (j >> 2)) & 1]
    cubes = minimize_cover(on, n)
    cnt = covered(cubes, n)
    assert np.array_equal(np.flatnonzero(cnt), on) and cnt.max() == 1


def test_prime_implicants_small():
    # f = m(0, 1, 2, 5, 6, 7) has six primes of size two
    primes = prime_implicants([0, 1, 2, 5, 6, 7], 3)
    assert len(primes) == 6


def test_exact_cover_is_minimum_on_cyclic_function():
    cubes = minimize_cover([0, 1, 2, 5, 6, 7], 3, method="exact")
    assert len(cubes) == 3


def test_heuristic_is_valid():
    rng = np.random.default_rng(3)
    on = sorted(rng.choice(1 << 10, size=300, replace=False).tolist())
    cubes = minimize_cover(on, 10, method="heuristic")
    cnt = covered(cubes, 10)
    assert np.array_equal(np.flatnonzero(cnt), on)


def test_empty_on_set():
    assert minimize_cover([], 3) == []


def test_out_of_range_index():
    with pytest.raises(ValueError):
        minimize_cover([9], 3)


@st.composite
def two_valued(draw):
    n = draw(st.integers(1, 8))
    bits = draw(st.lists(st.booleans(), min_size=1 << n, max_size=1 << n))
    lo, hi = draw(st.sampled_from([(1.0, 10.0), (0.0, 2.5), (4.0, 1.0)]))
    return n, np.where(bits, hi, lo)


@given(two_valued())
def test_minimized_operator_reconstructs_field(case):
    n, vals = case
    f = PiecewiseField.from_array(vals, name="c")
    op = field_to_operator(f, n)
    assert np.allclose(op.diagonal_values(), vals, atol=1e-12)
    assert len(op) <= naive_term_count(f)


@given(two_valued())
def test_cover_is_disjoint(case):
    n, vals = case
    cov = field_cover(PiecewiseField.from_array(vals), n)
    assert cov.is_disjoint()
    assert np.allclose(cov.evaluate(), vals)


def test_transforms():
    vals = np.array([1.0, 4.0, 4.0, 1.0])
    f = PiecewiseField.from_array(vals)
    for name, fn in [("sqrt", np.sqrt), ("inv", lambda x: 1 / x), ("inv_sqrt", lambda x: x**-0.5)]:
        assert np.allclose(field_to_operator(f, 2, name).diagonal_values(), fn(vals))
    with pytest.raises(ValueError):
        field_to_operator(PiecewiseField.from_array([0.0, 1.0]), 1, "inv")


def test_cover_text_lists_cubes():
    cov = ImplicantCover(2, (Cube("1-", 3.0),), 1.0)
    text = cov.to_text()
    assert "1-" in text or "1I" in text
