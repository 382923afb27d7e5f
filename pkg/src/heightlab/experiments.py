"""Specialisation experiments for Kummer families ``t -> Kummer(a(t))``.

GA1 compares ``h_{0,2}(M(t))`` with ``h(t) = log max(|num|, |den|)``; the
expected slope is the geometric height of the family.  GA2 compares the local
height at one place with ``-log |q(t)|_v`` near a degeneration point ``x``.
"""
from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
import sympy
from scipy.optimize import linprog

from .geoheight import DegenerationPoint, GeometricVariation, Polarization, local_geometric_height
from .hodge.metric import HodgeContext
from .motives import arch_local_height, finite_local_height, global_height_wd, kummer_motive, point_height
from .qlinalg import Filtration, Matrix

__all__ = [
    "Family",
    "ExperimentConfig",
    "FitResult",
    "GA2Row",
    "parse_family",
    "parse_sweep",
    "farey",
    "lad_fit",
    "family_geometric_height",
    "ga1_experiment",
    "ga2_experiment",
    "ZERO_TOL",
]

T = sympy.Symbol("T")

# numerical values below this count as zero residuals
ZERO_TOL = mpmath.mpf(10) ** -30


class SamplePointError(ValueError):
    """A sample point is a zero or pole of the family, or equals the base point."""


@dataclass(frozen=True)
class Family:
    """``a(T) = num(T) / den(T)`` with coprime integer polynomials."""

    num: tuple   # coefficients, highest degree first
    den: tuple

    @property
    def expr(self):
        return sympy.Poly(self.num, T).as_expr() / sympy.Poly(self.den, T).as_expr()

    def __call__(self, t: Fraction) -> Fraction:
        n = _horner(self.num, t)
        d = _horner(self.den, t)
        if d == 0 or n == 0:
            raise SamplePointError(f"t = {t} is a zero or pole of a(T)")
        return n / d

    def __str__(self) -> str:
        return str(sympy.factor(self.expr))


def _horner(coeffs: Sequence[int], t: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * t + c
    return acc


def parse_family(text: str) -> Family:
    """Read ``a(T)`` from an expression such as ``"T*(T-1)^2"`` or ``"5/(T+1)"``."""
    try:
        e = sympy.sympify(text.replace("^", "**"), locals={"T": T, "t": T})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot read the family {text!r}: {exc}") from None
    if e.free_symbols - {T}:
        raise ValueError("the family may only involve T")
    n, d = sympy.fraction(sympy.cancel(sympy.together(e)))
    pn, pd = sympy.Poly(n, T), sympy.Poly(d, T)
    if pn.is_zero:
        raise ValueError("a(T) must not vanish identically")
    # clear rational coefficients
    den = sympy.ilcm(*[sympy.Rational(c).q for c in pn.all_coeffs() + pd.all_coeffs()])
    pn, pd = pn * den, pd * den
    num = tuple(int(c) for c in pn.all_coeffs())
    dd = tuple(int(c) for c in pd.all_coeffs())
    return Family(num, dd)


def family_geometric_height(fam: Family, prec: int = 64):
    """``h_{0,2}`` of the family over the projective line, with its local terms.

    Each zero or pole ``x`` carries the Kummer degeneration ``N = ord_x(a) E``;
    a point of degree ``k`` over Q counts ``k`` times.  Returns
    ``(total, [(label, degree, local height), ...])``.
    """
    W = Filtration.from_weights([0, -2])
    pols = {0: Polarization.of(0, [[1]]), -2: Polarization.of(-2, [[1]])}
    orders = []
    for poly, sign in ((fam.num, 1), (fam.den, -1)):
        _, facs = sympy.factor_list(sympy.Poly(poly, T).as_expr())
        for f, e in facs:
            orders.append((str(f), int(sympy.degree(f, T)), sign * int(e)))
    ord_inf = len(fam.den) - len(fam.num)
    if ord_inf:
        orders.append(("1/T", 1, ord_inf))
    points = [DegenerationPoint(lab, Matrix([[0, 0], [o, 0]]), W) for lab, _, o in orders]
    gv = GeometricVariation(2, W, pols, points)
    rows, total = [], mpmath.mpf(0)
    with mpmath.workprec(prec):
        for (lab, deg, _), x in zip(orders, points):
            h = local_geometric_height(gv, x, 0, 2, prec)
            rows.append((lab, deg, h))
            total += deg * h
    return total, rows


def _vanishing_order(coeffs: Sequence[int], x: Fraction) -> int:
    cs = [Fraction(c) for c in coeffs]
    k = 0
    while len(cs) > 1 and _horner(cs, x) == 0:
        # synthetic division by (T - x)
        out, acc = [], Fraction(0)
        for c in cs[:-1]:
            acc = acc * x + c
            out.append(acc)
        cs = out
        k += 1
    return k


def local_order(fam: Family, x: Fraction | None) -> int:
    """``ord_x a`` at a rational point ``x``, or at infinity for ``x = None``."""
    if x is None:
        return len(fam.den) - len(fam.num)
    return _vanishing_order(fam.num, x) - _vanishing_order(fam.den, x)


# --------------------------------------------------------------------------
# samples
# --------------------------------------------------------------------------

def farey(n: int) -> list[Fraction]:
    """Farey fractions of order ``n`` in ``(0, 1]``, increasing."""
    out = []
    a, b, c, d = 0, 1, 1, n
    while c <= n:
        k = (n + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        out.append(Fraction(a, b))
    return out


def parse_sweep(spec: str) -> list[Fraction]:
    """Sample lists: ``farey:N``, ``pow:B:K1:K2`` or ``random:CAP:COUNT:SEED``.

    ``random`` draws ``n/m`` with ``max(|n|, m)`` log-uniform up to ``CAP``.
    """
    kind, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "farey" and len(args) == 1:
            return farey(int(args[0]))
        if kind == "pow" and len(args) == 3:
            b = Fraction(args[0])
            return [b ** k for k in range(int(args[1]), int(args[2]) + 1)]
        if kind == "random" and len(args) == 3:
            cap, count, seed = int(args[0]), int(args[1]), int(args[2])
            rng = random.Random(seed)
            out = []
            while len(out) < count:
                H = max(1, int(round(cap ** rng.random())))
                m = rng.randint(1, H)
                n = rng.choice([-1, 1]) * rng.randint(1, H)
                t = Fraction(n, m)
                if max(abs(t.numerator), t.denominator) <= cap:
                    out.append(t)
            return out
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad sweep {spec!r}: {exc}") from None
    raise ValueError(f"unknown sweep {spec!r}; use farey:N, pow:B:K1:K2 or random:CAP:COUNT:SEED")


# --------------------------------------------------------------------------
# GA1
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    family: Family
    samples: tuple
    place: str | None = None            # GA2: prime as a string, or "inf"
    base_point: Fraction | None = None  # GA2: x, None for infinity
    min_height: float | None = None     # GA1: keep samples with h(t) at least this
    w: int = 0
    d: int = 2
    prec: int = 128
    jobs: int = 1


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual_min: float          # against the fitted line
    residual_max: float
    sample_count: int
    geometric_height: float
    ga1_residual_min: object     # h(M(t)) - h_geo h(t)
    ga1_residual_max: object
    rows: tuple = field(default=(), repr=False)   # (t, h(t), h(M(t)))

    @property
    def band_width(self) -> float:
        return float(self.ga1_residual_max - self.ga1_residual_min)


def lad_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-absolute-deviation line ``y = s x + b`` as a linear program."""
    n = len(x)
    if n == 0:
        raise ValueError("no samples to fit")
    # variables: s, b, u_1..u_n, v_1..v_n with s x + b + u - v = y
    c = np.concatenate([[0.0, 0.0], np.ones(2 * n)])
    A = np.zeros((n, 2 + 2 * n))
    A[:, 0] = x
    A[:, 1] = 1.0
    A[np.arange(n), 2 + np.arange(n)] = 1.0
    A[np.arange(n), 2 + n + np.arange(n)] = -1.0
    bounds = [(None, None), (None, None)] + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A, b_eq=np.asarray(y, dtype=float), bounds=bounds, method="highs")
    if not res.success:
        raise ArithmeticError(f"LAD fit failed: {res.message}")
    return float(res.x[0]), float(res.x[1])


def _sample_height(args):
    fam, t, w, d, prec = args
    ctx = HodgeContext(prec=prec)
    h, _ = global_height_wd(kummer_motive(fam(t), prec), w, d, ctx)
    return h


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(a) for a in items]


def ga1_experiment(cfg: ExperimentConfig) -> FitResult:
    fam = cfg.family
    samples = list(cfg.samples)
    for t in samples:
        fam(t)
    if cfg.min_height is not None:
        samples = [t for t in samples if point_height(t) >= cfg.min_height]
    hs = _map(_sample_height, [(fam, t, cfg.w, cfg.d, cfg.prec) for t in samples], cfg.jobs)
    geo, _ = family_geometric_height(fam, cfg.prec)
    with mpmath.workprec(cfg.prec):
        xs = [mpmath.log(max(abs(t.numerator), t.denominator)) for t in samples]
        ga1 = [h - geo * x for h, x in zip(hs, xs)]
        s, b = lad_fit([float(x) for x in xs], [float(h) for h in hs])
        fit_res = [float(h) - (s * float(x) + b) for h, x in zip(hs, xs)]
        return FitResult(
            slope=s, intercept=b,
            residual_min=min(fit_res), residual_max=max(fit_res),
            sample_count=len(samples), geometric_height=float(geo),
            ga1_residual_min=min(ga1), ga1_residual_max=max(ga1),
            rows=tuple(zip(samples, xs, hs)),
        )


# --------------------------------------------------------------------------
# GA2
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GA2Row:
    t: Fraction
    local: object            # h_{w,d,v}(M(t))
    point: object            # h_{x,v}(t) = -log |q(t)|_v
    residual: object
    exact: bool              # residual known exactly (as a multiple of log p)
    local_coefficient: Fraction | None = None
    point_coefficient: Fraction | None = None
    residual_coefficient: Fraction | None = None

    @property
    def is_zero(self) -> bool:
        if self.exact:
            return self.residual_coefficient == 0
        return abs(self.residual) < ZERO_TOL


def _ord_p(x: Fraction, p: int) -> int:
    k = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        k += 1
    while d % p == 0:
        d //= p
        k -= 1
    return k


def ga2_experiment(cfg: ExperimentConfig):
    """Rows ``(t, h_{v}(M(t)), h_{x,v}(t), residual)`` and the geometric local height."""
    fam = cfg.family
    x = cfg.base_point
    place = cfg.place or "inf"
    o = local_order(fam, x)
    geo_local = abs(o)      # local geometric height of N = ord_x(a) E
    ctx = HodgeContext(prec=cfg.prec)
    rows = []
    for t in cfg.samples:
        if x is not None and t == x:
            raise SamplePointError("t equals the base point")
        q = (t - x) if x is not None else 1 / t
        M = kummer_motive(fam(t), cfg.prec)
        with mpmath.workprec(cfg.prec):
            if place == "inf":
                v = M.place("inf")
                loc = arch_local_height(M, v, cfg.w, cfg.d, ctx).value
                pt = -mpmath.log(abs(mpmath.mpf(q.numerator) / q.denominator))
                rows.append(GA2Row(t, loc, pt, loc - geo_local * pt, False))
            else:
                p = int(place)
                try:
                    lh = finite_local_height(M, M.place(place), cfg.w, cfg.d, cfg.prec)
                    c_loc = lh.coefficient
                except KeyError:
                    c_loc = Fraction(0)
                c_pt = Fraction(_ord_p(q, p))      # -log|q|_p = ord_p(q) log p
                lp = mpmath.log(p)
                if c_loc is None:
                    loc = lh.value
                    rows.append(GA2Row(t, loc, c_pt * lp, loc - geo_local * c_pt * lp, False))
                else:
                    r = c_loc - geo_local * c_pt
                    rows.append(GA2Row(t, c_loc * lp, c_pt * lp, r * lp, True, c_loc, c_pt, r))
    return geo_local, rows
