import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot.algebra import (
    StratifiedAlgebra,
    StructuralError,
    abelian,
    algebra_from_dict,
    algebra_to_dict,
    bracket,
    bracket_witnesses,
    dump_algebra,
    engel,
    find_relabeling,
    heisenberg,
    homogeneous_dimension,
    kappa,
    load_algebra,
    preset,
    validate,
)
from carnot.free import free_nilpotent

PRESETS = ["heisenberg", "heisenberg(2)", "engel", "abelian(3)", "free(2,3)", "free(3,2)"]
rationals = st.fractions(min_value=-3, max_value=3, max_denominator=6)


def e(q, i):
    return [Fraction(int(k == i)) for k in range(q)]


@pytest.mark.parametrize("name", PRESETS)
def test_presets_are_valid(name):
    assert validate(preset(name)).ok


def test_abelian_is_valid_and_flat():
    A = abelian(4)
    assert validate(A).ok
    assert A.step == 1 and A.weights == (1, 1, 1, 1)


def test_grading_violation_is_reported_with_indices():
    A = StratifiedAlgebra((2, 1), {(0, 1): {2: 1, 0: 1}})
    report = validate(A)
    assert not report.ok
    assert "grading" in report.axioms()
    # 1-based (1, 2, 1)
    assert any(v.axiom == "grading" and v.indices == (0, 1, 0) for v in report.violations)


def test_jacobi_violation_is_reported():
    # [Y3, [Y1, Y2]] = Y7 while the other two cyclic terms vanish
    br = {(0, 1): {3: 1}, (1, 2): {4: 1}, (2, 0): {5: 1}, (2, 3): {6: 1}}
    report = validate(StratifiedAlgebra((3, 3, 1), br))
    assert any(v.axiom == "jacobi" and v.indices == (0, 1, 2) for v in report.violations)


def test_generation_violation_is_reported():
    A = StratifiedAlgebra((2, 1), {})
    assert "generation" in validate(A).axioms()


@pytest.mark.parametrize(
    "dims, brackets",
    [((0, 1), {}), ((-1,), {}), ((2, 1), {(0, 5): {2: 1}}), ((2, 1), {(0, 1): {7: 1}})],
)
def test_malformed_input_raises_structural_error(dims, brackets):
    with pytest.raises(StructuralError):
        StratifiedAlgebra(dims, brackets)


def test_heisenberg_bracket():
    A = heisenberg(1)
    assert bracket(A, e(3, 0), e(3, 1)) == e(3, 2)


def test_engel_bracket():
    A = engel()
    assert bracket(A, e(4, 0), e(4, 2)) == e(4, 3)


def test_bracket_dimension_mismatch():
    with pytest.raises((ValueError, IndexError)):
        bracket(heisenberg(1), [1, 0], [0, 1, 0])


@pytest.mark.parametrize("name", ["heisenberg", "engel", "free(2,3)"])
@given(data=st.data())
def test_bracket_is_bilinear_and_antisymmetric(name, data):
    A = preset(name)
    vec = st.lists(rationals, min_size=A.dim, max_size=A.dim)
    u, v, w = data.draw(vec), data.draw(vec), data.draw(vec)
    a = data.draw(rationals)
    assert bracket(A, u, u) == [0] * A.dim
    assert bracket(A, u, v) == [-c for c in bracket(A, v, u)]
    lhs = bracket(A, [a * x + y for x, y in zip(u, w)], v)
    rhs = [a * x + y for x, y in zip(bracket(A, u, v), bracket(A, w, v))]
    assert lhs == rhs


def test_kappa_heisenberg():
    A = heisenberg(1)
    assert kappa(A, (0, 1), 2) == 1
    assert kappa(A, (1, 0), 2) == -1
    assert kappa(A, (0, 1), 0) == 0


def test_kappa_index_bounds():
    with pytest.raises(IndexError):
        kappa(heisenberg(1), (0, 3), 2)


@pytest.mark.parametrize("name", PRESETS)
@given(data=st.data())
def test_kappa_vanishes_off_weight(name, data):
    A = preset(name)
    word = data.draw(st.lists(st.integers(0, A.dim - 1), min_size=2, max_size=4))
    target = data.draw(st.integers(0, A.dim - 1))
    if A.weights[target] != sum(A.weights[l] for l in word):
        assert kappa(A, word, target) == 0


def test_witnesses():
    assert bracket_witnesses(heisenberg(1))[2] == (0, 1)
    wit = bracket_witnesses(engel())
    assert wit[3] == (0, 0, 1)
    assert wit[0] == (0,) and wit[1] == (1,)


@pytest.mark.parametrize("name", PRESETS)
def test_witness_words_reproduce_basis(name):
    A = preset(name)
    for l, word in bracket_witnesses(A).items():
        assert A.nested_bracket(word) == {l: 1}


@pytest.mark.parametrize("A, Q", [(heisenberg(1), 4), (engel(), 7), (abelian(5), 5), (heisenberg(2), 6)])
def test_homogeneous_dimension(A, Q):
    assert homogeneous_dimension(A) == Q


def test_gauge_exponent():
    assert heisenberg(1).gauge_exponent == 4
    assert engel().gauge_exponent == 12
    assert abelian(3).gauge_exponent == 2


def test_preset_errors():
    for bad in ["lie", "engel(2)", "abelian", "free(2)"]:
        with pytest.raises(KeyError):
            preset(bad)


@pytest.mark.parametrize("name", PRESETS)
def test_json_roundtrip(name, tmp_path):
    A = preset(name)
    data = algebra_to_dict(A)
    B = algebra_from_dict(json.loads(json.dumps(data)))
    assert B.layer_dims == A.layer_dims
    assert find_relabeling(A, B) == tuple(range(A.dim))
    path = tmp_path / "a.json"
    dump_algebra(A, path)
    assert find_relabeling(A, load_algebra(path)) == tuple(range(A.dim))


def test_json_rejects_invalid_algebra():
    with pytest.raises(StructuralError):
        algebra_from_dict({"layer_dims": [0]})


def test_load_algebra_accepts_preset_names():
    assert load_algebra("engel").layer_dims == (2, 1, 1)
