from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heightlab.experiments import (
    ExperimentConfig,
    SamplePointError,
    family_geometric_height,
    farey,
    ga1_experiment,
    ga2_experiment,
    lad_fit,
    local_order,
    parse_family,
    parse_sweep,
)
from heightlab.motives import point_height


def test_parse_family():
    f = parse_family("T*(T-1)^2")
    assert f.num == (1, -2, 1, 0) and f.den == (1,)
    g = parse_family("5/(2*T+1)")
    assert g(Fraction(1)) == Fraction(5, 3)
    h = parse_family("T/2")
    assert h(Fraction(4)) == 2
    for bad in ("T + x", "0", "T +* 1"):
        with pytest.raises(ValueError):
            parse_family(bad)


def test_family_zero_and_pole():
    f = parse_family("(T-1)/(T+2)")
    with pytest.raises(SamplePointError):
        f(Fraction(1))
    with pytest.raises(SamplePointError):
        f(Fraction(-2))


def test_local_orders():
    f = parse_family("T*(T-1)^2/(T+3)")
    assert local_order(f, Fraction(0)) == 1
    assert local_order(f, Fraction(1)) == 2
    assert local_order(f, Fraction(-3)) == -1
    assert local_order(f, None) == -2
    assert local_order(f, Fraction(5)) == 0


@pytest.mark.parametrize("text,want", [("T", 2), ("T*(T-1)^2", 6), ("T^2+1", 4), ("(T-1)/(T+1)", 2)])
def test_geometric_height(text, want):
    total, _ = family_geometric_height(parse_family(text))
    assert total == pytest.approx(want)


def test_farey():
    assert farey(3) == [Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1)]
    assert len(farey(10)) == 32


def test_parse_sweep():
    assert parse_sweep("pow:5:0:2") == [1, 5, 25]
    r = parse_sweep("random:100:20:1")
    assert len(r) == 20 and all(max(abs(t.numerator), t.denominator) <= 100 for t in r)
    assert r == parse_sweep("random:100:20:1")
    with pytest.raises(ValueError):
        parse_sweep("grid:3")


def test_lad_fit_ignores_outlier():
    x = [0, 1, 2, 3, 4, 5]
    y = [1, 3, 5, 7, 100, 11]
    s, b = lad_fit(x, y)
    assert s == pytest.approx(2) and b == pytest.approx(1)


@settings(max_examples=20, deadline=None)
@given(st.fractions(min_value=-1000, max_value=1000, max_denominator=1000).filter(bool))
def test_identity_family_is_twice_point_height(t):
    r = ga1_experiment(ExperimentConfig(parse_family("T"), (t,), prec=96))
    assert abs(r.ga1_residual_max) < 1e-25
    assert float(r.rows[0][2]) == pytest.approx(2 * point_height(t))


def test_ga1_cubic_small_sweep():
    samples = tuple(t for t in parse_sweep("random:1000:60:4") if t != 1)
    r = ga1_experiment(ExperimentConfig(parse_family("T*(T-1)^2"), samples, prec=64))
    assert r.geometric_height == pytest.approx(6)
    assert r.band_width < 20
    assert r.sample_count == len(samples)


def test_ga1_min_height_filter():
    samples = (Fraction(2), Fraction(1000), Fraction(1, 999))
    r = ga1_experiment(ExperimentConfig(parse_family("T"), samples, min_height=3.0))
    assert r.sample_count == 2


def test_ga2_finite_exact():
    samples = tuple(Fraction(5) ** k for k in range(1, 8))
    geo, rows = ga2_experiment(ExperimentConfig(parse_family("T"), samples, place="5",
                                                base_point=Fraction(0)))
    assert geo == 1
    assert all(r.exact and r.residual_coefficient == 0 for r in rows)


def test_ga2_square_family():
    samples = tuple(Fraction(5) ** k for k in range(1, 5))
    geo, rows = ga2_experiment(ExperimentConfig(parse_family("T^2"), samples, place="5",
                                                base_point=Fraction(0)))
    assert geo == 2
    assert [r.local_coefficient for r in rows] == [2, 4, 6, 8]
    assert all(r.is_zero for r in rows)


def test_ga2_real():
    samples = tuple(Fraction(1, 10 ** k) for k in range(1, 8))
    _, rows = ga2_experiment(ExperimentConfig(parse_family("T"), samples, place="inf",
                                              base_point=Fraction(0)))
    assert all(r.is_zero for r in rows)


def test_ga2_rejects_base_point():
    with pytest.raises(SamplePointError):
        ga2_experiment(ExperimentConfig(parse_family("T+1"), (Fraction(0),), place="inf",
                                        base_point=Fraction(0)))


def test_parallel_matches_serial():
    samples = tuple(parse_sweep("random:500:12:7"))
    a = ga1_experiment(ExperimentConfig(parse_family("T"), samples, prec=64, jobs=1))
    b = ga1_experiment(ExperimentConfig(parse_family("T"), samples, prec=64, jobs=2))
    assert [float(h) for _, _, h in a.rows] == [float(h) for _, _, h in b.rows]
