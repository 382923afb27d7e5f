import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heightlab.hodge import (
    CoefficientTableMissing,
    GaussianRational as G,
    HodgeContext,
    MixedHodgeStructure,
    NotPositiveDefinite,
    NumericField,
    ZetaTable,
    archimedean_height,
    bidegree_components,
    deligne_bigrading,
    default_zeta_table,
    delta_splitting,
    full_splitting,
    hodge_metric,
    is_r_split,
    kummer_mhs,
    parse_zeta_table,
)
from heightlab.qlinalg import Filtration, Matrix

from helpers import random_mhs_data

KUMMER_POLS = {0: Matrix([[1]]), -2: Matrix([[1]])}


def build(seed, numeric=False, **kw):
    ws, F, labels, forms = random_mhs_data(random.Random(seed), **kw)
    K = NumericField(128) if numeric else None
    H = MixedHodgeStructure.build(Filtration.from_weights(ws), F, K=K, prec=128)
    return H, ws, labels, forms


def test_gaussian_arithmetic():
    i = G(0, 1)
    assert i ** 2 == -1 and i ** 4 == 1 and i ** -1 == -i
    assert (G(1, 2) * G(3, -1)) / G(3, -1) == G(1, 2)
    assert G(Fraction(1, 2), 3).conjugate() == G(Fraction(1, 2), -3)


def test_kummer_bigrading():
    H = kummer_mhs(mpmath.log(5))
    big = deligne_bigrading(H)
    assert sorted(big.dims().items()) == [((-1, -1), 1), ((0, 0), 1)]


@pytest.mark.parametrize("a", [4, Fraction(5, 3), 7, Fraction(1, 2), Fraction(36, 25), -3])
def test_kummer_archimedean(a):
    a = Fraction(a)
    with mpmath.workprec(128):
        want = mpmath.log(mpmath.mpf(abs(a.numerator)) / a.denominator)
        x = want + (1j * mpmath.pi if a < 0 else 0)
        h = archimedean_height(kummer_mhs(x), KUMMER_POLS, 0, 2)
        assert abs(h - abs(want)) < mpmath.mpf(10) ** -30


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_reconstruction_exact(seed):
    H, *_ = build(seed)
    sd = delta_splitting(H)
    assert sd.residual == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_reconstruction_numeric(seed):
    H, *_ = build(seed, numeric=True)
    with mpmath.workprec(128):
        sd = delta_splitting(H)
        assert sd.residual < mpmath.mpf(10) ** -20


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_delta_support(seed):
    H, *_ = build(seed)
    sd = delta_splitting(H)
    for a, b in bidegree_components(H.K, sd.bigrading, sd.delta):
        assert a < 0 and b < 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_r_split_gives_zero_delta(seed):
    H, *_ = build(seed, twist=False)
    assert is_r_split(H)
    sd = delta_splitting(H)
    assert all(x == 0 for row in sd.delta for x in row)


def test_twisted_is_not_r_split():
    # weight 0 and -2 Tate lines with a non-real extension class
    W = Filtration.from_weights([0, -2])
    H = MixedHodgeStructure.build(W, {0: [[1, G(0, 1)]]})
    assert not is_r_split(H)
    sd = delta_splitting(H)
    # F^0 = exp(i delta) span(e0) = span(e0 + i e1), so delta maps e0 to e1
    assert sd.delta == [[0, 0], [1, 0]]


def test_zeta_zeroed_on_two_jump_fixtures():
    ctx = HodgeContext()
    zctx = ctx.with_table(ctx.zeta_table.zeroed())
    rng = random.Random(0)
    used = 0
    for _ in range(120):
        ws, F, _, forms = random_mhs_data(rng)
        if len(set(ws)) != 2 or max(ws) - min(ws) < 2:
            continue
        H = MixedHodgeStructure.build(Filtration.from_weights(ws), F)
        pols = {w: Matrix(f) for w, f in forms.items()}
        w, d = max(ws), max(ws) - min(ws)
        a = archimedean_height(H, pols, w, d, ctx)
        b = archimedean_height(H, pols, w, d, zctx)
        assert abs(a - b) < 1e-12
        used += 1
    assert used >= 5


def test_metric_positive_on_weight_one():
    W = Filtration.from_weights([1, 1])
    J = Matrix([[0, 1], [-1, 0]])
    H = MixedHodgeStructure.build(W, {1: [[1, G(Fraction(1, 3), 2)]]})
    m = hodge_metric(H, J)
    assert all(e > 0 for e in m.eigenvalues)
    H_bad = MixedHodgeStructure.build(W, {1: [[1, G(Fraction(1, 3), -2)]]})
    with pytest.raises(NotPositiveDefinite):
        hodge_metric(H_bad, J)


def test_zeta_table_text():
    t = parse_zeta_table("version 7\n-1 -1 | zero\n-1 -2 | (-1,-2) | 0 -1/2\n")
    assert t.version == "7"
    assert t.covered() == {(-1, -1), (-1, -2), (-2, -1)}
    with pytest.raises(ValueError):
        parse_zeta_table("-1 -2 | (-1,-1) | 1 0\n")
    assert ZetaTable.zero().covered() == set()
    assert default_zeta_table().covered() >= {(-1, -1), (-2, -1), (-1, -2)}


def test_missing_coefficients_reported():
    # inputs reaching an uncovered bidegree are refused
    ctx = HodgeContext(zeta_table=ZetaTable.zero())
    rng = random.Random(1)
    raised = False
    for _ in range(60):
        ws, F, _, _ = random_mhs_data(rng)
        H = MixedHodgeStructure.build(Filtration.from_weights(ws), F)
        try:
            full_splitting(H, ctx)
        except CoefficientTableMissing:
            raised = True
            break
    assert raised
