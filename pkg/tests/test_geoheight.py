import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heightlab.geoheight import (
    DegenerationPoint,
    GeometricVariation,
    MissingPolarization,
    MissingRMF,
    Polarization,
    build_P,
    global_geometric_height,
    local_geometric_height,
    local_radicand,
    pure_geometric_height,
)
from heightlab.monodromy import NilpotentMap
from heightlab.qlinalg import Filtration

from helpers import polarized_fixture


def kummer_like(n):
    W = Filtration.from_weights([0, -2])
    pols = {0: Polarization.of(0, [[1]]), -2: Polarization.of(-2, [[1]])}
    x = DegenerationPoint("x", NilpotentMap.of([[0, 0], [n, 0]]), W)
    return GeometricVariation(2, W, pols, [x]), x


def fixture(seed):
    N, ws, forms = polarized_fixture(random.Random(seed))
    W = Filtration.from_weights(ws)
    pols = {w: Polarization.of(w, f) for w, f in forms.items()}
    x = DegenerationPoint("x", NilpotentMap.of(N), W)
    return GeometricVariation(len(ws), W, pols, [x]), x, ws


def components(ws):
    return [(w, d) for w in set(ws) for d in range(2, 7) if w - d in ws]


def test_kummer_shape_is_absolute_value():
    for n, want in [(3, 3), (-5, 5), (Fraction(2, 3), Fraction(2, 3))]:
        gv, x = kummer_like(n)
        assert local_radicand(gv, x, 0, 2) == Fraction(n) ** 2
        assert local_geometric_height(gv, x, 0, 2) == pytest.approx(float(want), abs=1e-15)


def test_frozen_radicands():
    # values frozen from the polarized fixture generator
    gv, x, _ = fixture(1)
    assert local_radicand(gv, x, 0, 2) == Fraction(16, 9)
    assert local_radicand(gv, x, -2, 2) == 1
    assert local_radicand(gv, x, 0, 4) == 0


def test_global_sums_points():
    W = Filtration.from_weights([0, -2])
    pols = {0: Polarization.of(0, [[1]]), -2: Polarization.of(-2, [[1]])}
    pts = [DegenerationPoint(str(k), NilpotentMap.of([[0, 0], [k, 0]]), W) for k in (1, -2, 4)]
    gv = GeometricVariation(2, W, pols, pts)
    assert global_geometric_height(gv, 0, 2) == pytest.approx(7.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_radicand_nonnegative(seed):
    gv, x, ws = fixture(seed)
    for w, d in components(ws):
        assert local_radicand(gv, x, w, d) >= 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([Fraction(2), Fraction(3), Fraction(1, 2)]))
def test_homogeneity(seed, c):
    gv, x, ws = fixture(seed)
    y = x.scaled(c)
    gy = GeometricVariation(gv.dim, gv.W, gv.polarizations, [y])
    for w, d in components(ws):
        a = local_geometric_height(gv, x, w, d)
        b = local_geometric_height(gy, y, w, d)
        assert abs(b - float(c) * a) <= 1e-12 * max(1, abs(a))


def test_paired_space_dimension():
    gv, _, _ = fixture(1)
    assert build_P(gv, 0, 2).dim == 1


def test_missing_polarization():
    W = Filtration.from_weights([0, -2])
    with pytest.raises(MissingPolarization):
        GeometricVariation(2, W, {0: Polarization.of(0, [[1]])}, [])


def test_missing_rmf():
    W = Filtration.from_weights([-1, 0])
    with pytest.raises(MissingRMF):
        DegenerationPoint("x", NilpotentMap.of([[0, 1], [0, 0]]), W)


def test_pure_geometric_height():
    assert pure_geometric_height([(1, 3), (0, -3)]) == 3
    assert pure_geometric_height([(2, 1), (1, 0), (0, -1)]) == 2
    assert pure_geometric_height([(0, 0), (1, 0)]) == 0


def test_precision_of_roots():
    gv, x = kummer_like(2)
    with mpmath.workprec(200):
        v = local_geometric_height(gv, x, 0, 2, prec=200)
    assert v == 2
