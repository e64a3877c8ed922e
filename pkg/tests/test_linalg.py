from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot.linalg import SparseBasis, inverse, matmul, rank, solve, to_fraction

small = st.integers(min_value=-5, max_value=5)


def square(n):
    return st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)


def test_to_fraction_accepts_exact_inputs_only():
    assert to_fraction("3/4") == Fraction(3, 4)
    assert to_fraction(2) == 2
    with pytest.raises(TypeError):
        to_fraction(0.5)


def test_rank_of_known_matrices():
    assert rank([[1, 2], [2, 4]]) == 1
    assert rank([[1, 0, 0], [0, 1, 0], [1, 1, 0]]) == 2
    assert rank([[0, 0]]) == 0


@given(square(3), st.lists(small, min_size=3, max_size=3))
def test_solve_satisfies_system(m, b):
    if rank(m) < 3:
        with pytest.raises(ZeroDivisionError):
            solve(m, b)
        return
    x = solve(m, b)
    assert [sum(Fraction(a) * xi for a, xi in zip(row, x)) for row in m] == b


@given(square(3))
def test_inverse_is_two_sided(m):
    if rank(m) < 3:
        return
    inv = inverse(m)
    eye = [[int(i == j) for j in range(3)] for i in range(3)]
    assert matmul(m, inv) == eye
    assert matmul(inv, m) == eye


@given(st.lists(st.dictionaries(st.integers(0, 4), small, max_size=4), min_size=1, max_size=6))
def test_sparse_basis_express_roundtrip(vecs):
    basis = SparseBasis()
    for i, v in enumerate(vecs):
        basis.add(v, i)
    assert len(basis) == rank([[v.get(k, 0) for k in range(5)] for v in vecs])
    for v in vecs:
        combo = basis.express(v)
        rebuilt = {}
        for tag, c in combo.items():
            for k, a in vecs[tag].items():
                rebuilt[k] = rebuilt.get(k, 0) + c * a
        assert {k: a for k, a in rebuilt.items() if a} == {k: a for k, a in v.items() if a}


def test_sparse_basis_rejects_vector_outside_span():
    basis = SparseBasis()
    basis.add({0: 1}, "a")
    assert basis.pivots == [0]
    with pytest.raises(ValueError):
        basis.express({1: 1})
