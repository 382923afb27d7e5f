"""Exact linear algebra, checked against sympy where a second route exists."""
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from heightlab.qlinalg import (
    ContainmentError,
    DimensionMismatch,
    Filtration,
    Matrix,
    Subquotient,
    Subspace,
    bigraded_piece,
    graded_piece,
    hom_filtration,
    induced_filtration,
    nullspace,
    rref,
    splitting_basis,
    subspace_algebra,
)

fracs = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def matrices(max_n=4):
    return st.integers(1, max_n).flatmap(
        lambda m: st.integers(1, max_n).flatmap(
            lambda n: st.lists(st.lists(fracs, min_size=n, max_size=n), min_size=m, max_size=m)))


def sym(rows):
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in rows])


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rank_matches_sympy(rows):
    assert Matrix(rows).rank() == sym(rows).rank()


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_nullspace_matches_sympy(rows):
    n = len(rows[0])
    ours = Subspace.span(nullspace(rows, n), n)
    theirs = Subspace.span([[Fraction(int(x.p), int(x.q)) for x in v] for v in sym(rows).nullspace()], n)
    assert ours == theirs


def test_rref_is_canonical():
    red, piv = rref([[2, 4, 6], [1, 2, 4]], 3)
    assert piv == (0, 2)
    assert red == ((1, 2, 0), (0, 0, 1))


def test_inverse_and_solve():
    A = Matrix([[2, 1], [1, 1]])
    assert A @ A.inverse() == Matrix.identity(2)
    assert A.solve([3, 2]) == (1, 1)
    assert Matrix([[1, 1], [1, 1]]).solve([1, 0]) is None


def test_shape_errors():
    with pytest.raises(DimensionMismatch):
        Matrix([[1, 2]]) @ Matrix([[1, 2]])
    with pytest.raises(DimensionMismatch):
        Subspace.full(2) + Subspace.full(3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(fracs, min_size=3, max_size=3), max_size=3),
       st.lists(st.lists(fracs, min_size=3, max_size=3), max_size=3))
def test_dimension_formula(a, b):
    A, B = Subspace.span(a, 3), Subspace.span(b, 3)
    assert (A + B).dim + (A & B).dim == A.dim + B.dim
    assert (A + B).contains(A) and A.contains(A & B)
    assert subspace_algebra("intersect", A, B) == (A & B)


def test_preimage_and_image():
    M = Matrix([[0, 1], [0, 0]])
    line = Subspace.span([[1, 0]], 2)
    assert line.preimage(M) == Subspace.full(2)
    assert Subspace.full(2).image(M) == line
    assert Subspace.zero(2).preimage(M) == Subspace.span([[1, 0]], 2)


def test_filtration_from_weights():
    W = Filtration.from_weights([0, -2, -2, 1])
    assert W.jumps == (-2, 0, 1)
    assert W.gr_dims() == {-2: 2, 0: 1, 1: 1}
    assert W[-5].is_zero() and W[7].is_full()
    assert graded_piece(W, 0).dim == 1
    assert W.shifted(2).jumps == (0, 2, 3)


def test_filtration_must_increase():
    with pytest.raises(ContainmentError):
        Filtration.from_steps(2, {0: Subspace.span([[1, 0]], 2), 1: Subspace.span([[0, 1]], 2)})


def test_subquotient_roundtrip():
    top = Subspace.full(3)
    bottom = Subspace.span([[1, 1, 0]], 3)
    sq = Subquotient(top, bottom)
    assert sq.dim == 2
    for c in [(1, 0), (0, 1), (Fraction(2, 3), -4)]:
        assert sq.coordinates(sq.lift(c)) == tuple(Fraction(x) for x in c)
    # elements of the bottom have zero class
    assert sq.coordinates([1, 1, 0]) == (0, 0)


def test_induced_filtrations():
    W = Filtration.from_weights([-1, 0, 0])
    S = Subspace.span([[1, 1, 0]], 3)
    R = induced_filtration(W, S, "restrict")
    assert R.gr_dims() == {0: 1}
    Q = induced_filtration(W, S, "quotient")
    assert sum(Q.gr_dims().values()) == 2


def test_bigraded_piece_dimensions():
    W = Filtration.from_weights([-1, -1, 0])
    Wp = Filtration.from_weights([-2, 0, 0])
    assert bigraded_piece(W, Wp, -1, -2).dim == 1
    assert bigraded_piece(W, Wp, -1, 0).dim == 1
    assert bigraded_piece(W, Wp, 0, 0).dim == 1


def test_splitting_basis_spans():
    W = Filtration.from_weights([1, 0, 0])
    vs = splitting_basis(W)
    assert [w for w, _ in vs] == [0, 0, 1]
    assert Subspace.span([v for _, v in vs], 3).is_full()


def test_hom_filtration_degree():
    W = Filtration.from_weights([0, -2])
    H = hom_filtration(W, W)
    # the map e0 -> e1 lowers weight by 2; row-major flattening of [[0,0],[1,0]]
    assert (0, 0, 1, 0) in H[-2]
    assert (0, 1, 0, 0) not in H[1]


def test_random_products_associate():
    rng = random.Random(3)
    for _ in range(10):
        A, B, C = (Matrix([[Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(3)]
                           for _ in range(3)]) for _ in range(3))
        assert (A @ B) @ C == A @ (B @ C)
