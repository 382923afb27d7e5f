"""Geometric heights from polarized graded pieces and local monodromy.

For a degeneration point ``x`` with local monodromy logarithm ``N`` the
class ``N̄_{-d}`` decomposes into components

    N̄_{x,w,d} ∈ gr^{W'}_{-2} P,   P = (gr^W_w)^* ⊗ gr^W_{w-d} = Hom(gr_w, gr_{w-d}),

and the local height is ``<Ad(N)^{d-2} N̄, N̄>^{1/d}``.  Elements of ``P`` are
held as ``dim gr_{w-d} x dim gr_w`` matrices in the lift bases of the two
graded pieces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .monodromy import (
    NilpotentMap,
    NonExistence,
    NotFound,
    SplittingError,
    deligne_splitting,
    find_graded_splitting,
    relative_monodromy_filtration,
)
from .qlinalg import (
    DimensionMismatch,
    Filtration,
    Matrix,
    Subquotient,
    graded_piece,
    hom_filtration,
)

__all__ = [
    "NegativePairing",
    "MissingPolarization",
    "MissingRMF",
    "Polarization",
    "DegenerationPoint",
    "GeometricVariation",
    "PairedSpaceP",
    "build_P",
    "pairing_d_minus_2",
    "nbar_component",
    "local_radicand",
    "local_geometric_height",
    "global_geometric_height",
    "pure_geometric_height",
    "real_root",
]

DEFAULT_PREC = 64


class NegativePairing(ArithmeticError):
    """The radicand is negative: the polarization data is not genuine."""


class MissingPolarization(KeyError):
    pass


class MissingRMF(ValueError):
    """A degeneration point has no relative monodromy filtration."""


@dataclass(frozen=True)
class Polarization:
    """Bilinear form on ``gr^W_w`` in the lift basis of that graded piece."""

    weight: int
    form: Matrix

    def __post_init__(self):
        Q = self.form
        if Q.nrows != Q.ncols:
            raise DimensionMismatch("polarization form must be square")
        if Q.nrows and Q.rank() != Q.nrows:
            raise ValueError(f"polarization of weight {self.weight} is degenerate")
        sign = 1 if self.weight % 2 == 0 else -1
        if Q.T != Q * sign:
            kind = "symmetric" if sign == 1 else "antisymmetric"
            raise ValueError(f"polarization of weight {self.weight} must be {kind}")

    @classmethod
    def of(cls, weight: int, form) -> "Polarization":
        if not isinstance(form, Matrix):
            form = Matrix(form) if len(form) else Matrix.zeros(0, 0)
        return cls(weight, form)


@dataclass(frozen=True)
class DegenerationPoint:
    """A point of the base with its local monodromy logarithm."""

    label: str
    N: NilpotentMap
    W: Filtration
    Wp: Filtration = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        N = self.N if isinstance(self.N, NilpotentMap) else NilpotentMap.of(self.N)
        object.__setattr__(self, "N", N)
        Wp = relative_monodromy_filtration(N, self.W)
        if isinstance(Wp, NonExistence):
            raise MissingRMF(f"no relative monodromy filtration at {self.label}: {Wp.reason}")
        object.__setattr__(self, "Wp", Wp)

    def scaled(self, c) -> "DegenerationPoint":
        return DegenerationPoint(self.label, self.N.scaled(c), self.W)


@dataclass(frozen=True)
class GeometricVariation:
    """Finite data of a variation: weight filtration, polarizations, degenerations."""

    dim: int
    W: Filtration
    polarizations: dict
    points: tuple[DegenerationPoint, ...] = ()

    def __post_init__(self):
        if self.W.ambient != self.dim:
            raise DimensionMismatch("W lives in the wrong space")
        for w, n in self.W.gr_dims().items():
            if n == 0:
                continue
            pol = self.polarizations.get(w)
            if pol is None:
                raise MissingPolarization(w)
            if pol.form.nrows != n:
                raise DimensionMismatch(f"polarization of weight {w} has the wrong size")
        for w in self.polarizations:
            if w not in self.W.gr_dims():
                raise ValueError(f"polarization given for weight {w}, where gr^W is zero")
        object.__setattr__(self, "points", tuple(self.points))
        for x in self.points:
            if x.W != self.W:
                raise ValueError(f"point {x.label} carries a different weight filtration")


# --------------------------------------------------------------------------
# the paired space P
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PairedSpaceP:
    """``Hom(gr_w, gr_{w-d})`` with the form induced by the polarizations.

    ``<A, B> = tr(A^T Q_t B Q_s^{-1})``, the tensor product of the
    polarization ``Q_t`` on ``gr_{w-d}`` with the dual form on ``gr_w^*``.
    """

    w: int
    d: int
    source: Subquotient = field(compare=False)
    target: Subquotient = field(compare=False)
    Qs: Matrix
    Qt: Matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.target.dim, self.source.dim

    @property
    def dim(self) -> int:
        return self.target.dim * self.source.dim

    def pair(self, A: Matrix, B: Matrix) -> Fraction:
        if self.dim == 0:
            return Fraction(0)
        _check_shape(A, self.shape)
        _check_shape(B, self.shape)
        M = A.T @ self.Qt @ B @ self.Qs.inverse()
        return sum((M[i, i] for i in range(M.nrows)), Fraction(0))

    def form_matrix(self) -> Matrix:
        """Gram matrix on row-major vectorised elements of ``P``."""
        m, n = self.shape
        basis = []
        for i in range(m):
            for j in range(n):
                E = [[Fraction(int((a, b) == (i, j))) for b in range(n)] for a in range(m)]
                basis.append(Matrix(E, n))
        return Matrix([[self.pair(a, b) for b in basis] for a in basis], len(basis)) \
            if basis else Matrix.zeros(0, 0)


def _check_shape(A: Matrix, shape: tuple[int, int]) -> None:
    if A.shape != shape:
        raise DimensionMismatch(f"element of P must be {shape}, got {A.shape}")


def build_P(gv, w: int, d: int) -> PairedSpaceP:
    """The space ``P`` for weights ``w`` and ``w - d`` of ``gv``.

    ``gv`` needs attributes ``W`` and ``polarizations``; both
    :class:`GeometricVariation` and the motive data type qualify.
    """
    if d < 2:
        raise ValueError("P is used for d >= 2")
    src = graded_piece(gv.W, w)
    tgt = graded_piece(gv.W, w - d)
    if src.dim == 0 or tgt.dim == 0:
        return PairedSpaceP(w, d, src, tgt, Matrix.zeros(src.dim, src.dim),
                            Matrix.zeros(tgt.dim, tgt.dim))
    try:
        Qs = gv.polarizations[w].form
        Qt = gv.polarizations[w - d].form
    except KeyError as exc:
        raise MissingPolarization(exc.args[0]) from None
    return PairedSpaceP(w, d, src, tgt, Qs, Qt)


def _graded_maps(P: PairedSpaceP, N: Matrix) -> tuple[Matrix, Matrix]:
    return P.source.induced_map(N, P.source), P.target.induced_map(N, P.target)


def _ad(A: Matrix, Ns: Matrix, Nt: Matrix) -> Matrix:
    return Nt @ A - A @ Ns


def _wprime_on_P(P: PairedSpaceP, Wp: Filtration) -> Filtration:
    def induced(sq: Subquotient) -> Filtration:
        if not Wp.steps:
            return Filtration.from_steps(sq.dim, {}, None)
        steps = {k: sq.image_of(Wp[k]) for k in range(Wp.lowest, Wp.highest + 1)}
        return Filtration.from_steps(sq.dim, steps)
    return hom_filtration(induced(P.source), induced(P.target))


def _flat(A: Matrix) -> tuple:
    return tuple(x for r in A.rows for x in r)


def pairing_d_minus_2(P: PairedSpaceP, N, u: Matrix, v: Matrix,
                      Wp: Filtration | None = None) -> Fraction:
    """``<Ad(N)^{d-2} u, v>`` for ``u, v`` in ``W'_{-2} P``.

    ``N`` acts on the ambient space; its graded pieces act on ``P``.  When
    ``Wp`` (the relative monodromy filtration on the ambient space) is given,
    membership of ``u`` and ``v`` in ``W'_{-2} P`` is checked.
    """
    Nm = N.matrix if isinstance(N, NilpotentMap) else N
    if P.dim == 0:
        return Fraction(0)
    _check_shape(u, P.shape)
    _check_shape(v, P.shape)
    Ns, Nt = _graded_maps(P, Nm)
    if Wp is not None:
        WpP = _wprime_on_P(P, Wp)
        for name, x in (("u", u), ("v", v)):
            if _flat(x) not in WpP[-2]:
                raise ValueError(f"{name} does not lie in W'_{{-2}} P")
    x = u
    for _ in range(P.d - 2):
        x = _ad(x, Ns, Nt)
    return P.pair(x, v)


# --------------------------------------------------------------------------
# heights
# --------------------------------------------------------------------------

def real_root(radicand: Fraction, d: int, prec: int = DEFAULT_PREC):
    """Correctly rounded real ``d``-th root of a nonnegative rational."""
    if radicand < 0:
        raise NegativePairing(f"radicand {radicand} is negative")
    with mpmath.workprec(prec + 10):
        r = mpmath.root(mpmath.mpf(radicand.numerator) / radicand.denominator, d)
    with mpmath.workprec(prec):
        return +r


def nbar_component(gv, x: DegenerationPoint, w: int, d: int) -> Matrix:
    """Representative of ``N̄_{x,w,d}``: the Deligne component ``N_{-d}`` on graded pieces.

    The class in ``gr^{W'}_{-2} P`` is independent of the splitting, and the
    pairing is well defined on classes, so any representative will do.
    """
    P = build_P(gv, w, d)
    if P.dim == 0:
        return Matrix.zeros(*P.shape) if P.shape[0] else Matrix.zeros(0, P.shape[1])
    U = find_graded_splitting(x.N, x.W, x.Wp)
    if isinstance(U, NotFound):
        raise SplittingError(U.reason)
    ds = deligne_splitting(x.N, x.W, x.Wp, U)
    return P.source.induced_map(ds.component(-d), P.target)


def local_radicand(gv, x: DegenerationPoint, w: int, d: int) -> Fraction:
    """Exact ``(-1)^d <Ad(N)^{d-2} N̄, N̄>`` for the component ``(w, d)``.

    The sign makes the value agree with ``Q_P(N̄, Ad(N)^{d-2} N̄)``, which is
    the quantity the polarization makes nonnegative.
    """
    P = build_P(gv, w, d)
    if P.dim == 0:
        return Fraction(0)
    A = nbar_component(gv, x, w, d)
    sign = 1 if d % 2 == 0 else -1
    return sign * pairing_d_minus_2(P, x.N, A, A)


def local_geometric_height(gv, x: DegenerationPoint, w: int, d: int, prec: int = DEFAULT_PREC):
    """``h_{w,d,x}``: the ``d``-th root of the local radicand."""
    r = local_radicand(gv, x, w, d)
    if r < 0:
        raise NegativePairing(f"negative pairing {r} at point {x.label}, (w, d) = ({w}, {d})")
    return real_root(r, d, prec)


def global_geometric_height(gv, w: int, d: int, prec: int = DEFAULT_PREC):
    """Sum of the local heights over the listed degeneration points."""
    with mpmath.workprec(prec):
        total = mpmath.mpf(0)
        for x in gv.points:
            total += local_geometric_height(gv, x, w, d, prec)
        return total


def pure_geometric_height(degrees: Iterable[Sequence[int]]) -> int:
    """``sum r * deg(gr^r)`` over the Hodge-graded pieces."""
    total = 0
    for r, deg in degrees:
        total += int(r) * int(deg)
    return total
