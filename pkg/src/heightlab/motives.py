"""Realization data of mixed motives over Q, their local and global heights.

A motive is modelled by a rational space with a weight filtration,
polarizations of its graded pieces, and one datum per place: the tame
inertia logarithm ``N`` at a finite place, a mixed Hodge structure at an
archimedean place.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
from sympy import factorint, integer_nthroot

from .geoheight import (
    DegenerationPoint,
    NegativePairing,
    Polarization,
    local_radicand,
)
from .hodge.field import CSpace, cmat, from_columns, inverse, matmul
from .hodge.field import solve as ksolve
from .hodge.metric import PLACE_FACTOR, HodgeContext, archimedean_height
from .hodge.mhs import HodgeFiltration, MixedHodgeStructure, deligne_bigrading
from .monodromy import NilpotentMap
from .qlinalg import (
    Filtration,
    Matrix,
    Subquotient,
    Subspace,
    graded_piece,
)

__all__ = [
    "FinitePlaceData",
    "ArchPlaceData",
    "MotiveData",
    "LocalHeight",
    "HeightReport",
    "NoLift",
    "kummer_motive",
    "finite_local_height",
    "arch_local_height",
    "global_height_wd",
    "total_height",
    "direct_sum",
    "dual",
    "tate_twist",
    "restrict",
    "quotient",
    "pullback",
    "pushout",
    "extension_calculus",
    "hom_pure",
    "bb_extension_Q",
    "beilinson_bloch_reduction",
    "exact_root",
    "point_height",
]


class NoLift(ValueError):
    """The lifting problem of the d = 1 reduction has no solution."""


@dataclass(frozen=True)
class FinitePlaceData:
    label: str
    residue_norm: int
    N: NilpotentMap

    def __post_init__(self):
        if self.residue_norm < 2:
            raise ValueError("residue norm must be at least 2")
        if not isinstance(self.N, NilpotentMap):
            object.__setattr__(self, "N", NilpotentMap.of(self.N))


@dataclass(frozen=True)
class ArchPlaceData:
    label: str
    kind: str
    H: MixedHodgeStructure

    def __post_init__(self):
        if self.kind not in PLACE_FACTOR:
            raise ValueError(f"archimedean place kind must be 'real' or 'complex', not {self.kind!r}")


@dataclass(frozen=True)
class MotiveData:
    dim: int
    W: Filtration
    polarizations: dict
    finite_places: tuple = ()
    arch_places: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "finite_places", tuple(self.finite_places))
        object.__setattr__(self, "arch_places", tuple(self.arch_places))
        if self.W.ambient != self.dim:
            raise ValueError("W lives in the wrong space")
        if self.dim and not self.W.total.is_full():
            raise ValueError("W must filter the whole space")
        pols = {}
        for w, p in self.polarizations.items():
            pols[w] = p if isinstance(p, Polarization) else Polarization.of(w, p)
        object.__setattr__(self, "polarizations", pols)
        for w, n in self.type_signature.items():
            if w not in pols:
                raise ValueError(f"missing polarization for weight {w}")
            if pols[w].form.nrows != n:
                raise ValueError(f"polarization of weight {w} has the wrong size")
        for v in self.finite_places:
            if v.N.dim != self.dim:
                raise ValueError(f"place {v.label}: N has the wrong size")
            if not all(S.image(v.N.matrix) <= S for _, S in self.W.steps):
                raise ValueError(f"place {v.label}: N does not preserve W")
        for v in self.arch_places:
            if v.H.n != self.dim or v.H.W != self.W:
                raise ValueError(f"place {v.label}: Hodge data does not match W")

    @property
    def type_signature(self) -> dict[int, int]:
        """Ranks of the graded pieces of ``W``."""
        return {w: n for w, n in self.W.gr_dims().items() if n}

    def point(self, v: FinitePlaceData) -> DegenerationPoint:
        cache = self.__dict__.setdefault("_points", {})
        if v.label not in cache:
            cache[v.label] = DegenerationPoint(v.label, v.N, self.W)
        return cache[v.label]

    def place(self, label: str):
        for v in self.finite_places + self.arch_places:
            if v.label == label:
                return v
        raise KeyError(label)


# --------------------------------------------------------------------------
# heights
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalHeight:
    place: str
    kind: str
    w: int
    d: int
    value: object
    coefficient: Fraction | None = None     # exact multiple of log(log_of), when known
    log_of: int | None = None


@dataclass
class HeightReport:
    per_place: list = field(default_factory=list)
    per_wd: list = field(default_factory=list)      # (w, d, value, note)
    total: object = 0
    notes: list = field(default_factory=list)


def exact_root(r: Fraction, d: int) -> Fraction | None:
    """The rational ``d``-th root of ``r >= 0`` if it exists."""
    if r < 0:
        return None
    a, ea = integer_nthroot(r.numerator, d)
    b, eb = integer_nthroot(r.denominator, d)
    return Fraction(int(a), int(b)) if ea and eb else None


def finite_local_height(M: MotiveData, v: FinitePlaceData, w: int, d: int,
                        prec: int = 128) -> LocalHeight:
    """``log N(v)`` times the geometric local height of ``(N_v, W)``."""
    x = M.point(v)
    r = local_radicand(M, x, w, d)
    if r < 0:
        raise NegativePairing(f"negative pairing {r} at place {v.label}")
    coeff = exact_root(r, d)
    with mpmath.workprec(prec):
        root = mpmath.mpf(coeff.numerator) / coeff.denominator if coeff is not None else \
            mpmath.root(mpmath.mpf(r.numerator) / r.denominator, d)
        value = root * mpmath.log(v.residue_norm)
    return LocalHeight(v.label, "finite", w, d, value, coeff, v.residue_norm)


def arch_local_height(M: MotiveData, v: ArchPlaceData, w: int, d: int,
                      ctx: HodgeContext | None = None) -> LocalHeight:
    ctx = ctx or HodgeContext()
    pols = {k: p.form for k, p in M.polarizations.items()}
    with mpmath.workprec(ctx.prec):
        value = PLACE_FACTOR[v.kind] * archimedean_height(v.H, pols, w, d, ctx)
    return LocalHeight(v.label, v.kind, w, d, value)


def global_height_wd(M: MotiveData, w: int, d: int, ctx: HodgeContext | None = None):
    """``h_{w,d}(M)`` as the sum over all places, with the per-place rows."""
    if d < 2:
        raise ValueError("use total_height for d = 0, 1")
    ctx = ctx or HodgeContext()
    rows = [finite_local_height(M, v, w, d, ctx.prec) for v in M.finite_places]
    rows += [arch_local_height(M, v, w, d, ctx) for v in M.arch_places]
    with mpmath.workprec(ctx.prec):
        total = mpmath.fsum([r.value for r in rows]) if rows else mpmath.mpf(0)
    return total, rows


PURE_OUT_OF_SCOPE = "d=0: pure height not computed (no handler given)"


def total_height(M: MotiveData, ctx: HodgeContext | None = None,
                 d0: Callable[[MotiveData, int], object] | None = None,
                 d1: Callable[[MotiveData, int], object] | None = None) -> HeightReport:
    """``h(M) = sum over w and d >= 0 of h_{w,d}(M)``.

    ``d >= 2`` terms are computed here.  ``d = 1`` terms go through the
    Beilinson-Bloch reduction unless ``d1`` is given.  ``d = 0`` terms need a
    pure-height handler; without one they contribute 0 and the report says so.
    """
    ctx = ctx or HodgeContext()
    rep = HeightReport()
    ws = sorted(M.type_signature)
    terms = []
    with mpmath.workprec(ctx.prec):
        for w in ws:
            if d0 is None:
                rep.per_wd.append((w, 0, mpmath.mpf(0), "out of scope"))
            else:
                val = d0(M, w)
                rep.per_wd.append((w, 0, val, "handler"))
                terms.append(val)
        if d0 is None and ws:
            rep.notes.append(PURE_OUT_OF_SCOPE)
        for w in ws:
            if w - 1 in M.type_signature:
                if d1 is not None:
                    val, note = d1(M, w), "handler"
                else:
                    _, val = beilinson_bloch_reduction(M, w, ctx=ctx)
                    note = "reduction"
                rep.per_wd.append((w, 1, val, note))
                terms.append(val)
        for w in ws:
            for wt in ws:
                d = w - wt
                if d >= 2:
                    val, rows = global_height_wd(M, w, d, ctx)
                    rep.per_place.extend(rows)
                    rep.per_wd.append((w, d, val, ""))
                    terms.append(val)
        rep.total = mpmath.fsum(terms) if terms else mpmath.mpf(0)
    return rep


def point_height(t: Fraction) -> float:
    """``log max(|num|, |den|)`` of a rational in lowest terms."""
    t = Fraction(t)
    return math.log(max(abs(t.numerator), abs(t.denominator)))


# --------------------------------------------------------------------------
# Kummer motives
# --------------------------------------------------------------------------

def kummer_motive(a, prec: int = 128) -> MotiveData:
    """The extension of ``Q(0)`` by ``Q(1)`` attached to a nonzero rational ``a``.

    Basis ``e0`` (weight 0) and ``e1`` (the Betti generator of ``Q(1)``,
    weight -2).  At a prime ``p`` the inertia logarithm is
    ``ord_p(a) (e0 -> e1)``; at the real place the Hodge filtration has
    ``F^0`` spanned by ``e0 + log(a)/(2πi) e1``.
    """
    from .hodge import kummer_mhs

    a = Fraction(a)
    if a == 0:
        raise ValueError("a must be nonzero")
    W = Filtration.from_weights([0, -2])
    pols = {0: Polarization.of(0, [[1]]), -2: Polarization.of(-2, [[1]])}
    ords: dict[int, int] = {}
    for p, e in factorint(abs(a.numerator)).items():
        ords[int(p)] = ords.get(int(p), 0) + int(e)
    for p, e in factorint(a.denominator).items():
        ords[int(p)] = ords.get(int(p), 0) - int(e)
    finite = []
    for p in sorted(ords):
        if ords[p]:
            N = Matrix([[0, 0], [ords[p], 0]])
            finite.append(FinitePlaceData(str(p), p, NilpotentMap.of(N)))
    with mpmath.workprec(prec):
        log_a = mpmath.log(abs(mpmath.mpf(a.numerator) / a.denominator))
        if a < 0:
            log_a = mpmath.mpc(log_a, mpmath.pi)
        H = kummer_mhs(log_a, prec)
    return MotiveData(2, W, pols, finite, [ArchPlaceData("inf", "real", H)], f"Kummer({a})")


# --------------------------------------------------------------------------
# linear operations on realization data
# --------------------------------------------------------------------------

def _at_places_precision(fn):
    """Run ``fn`` at the highest working precision of the motives among its arguments."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        prec = 0
        for a in args:
            if isinstance(a, MotiveData):
                for v in a.arch_places:
                    if not v.H.K.exact:
                        prec = max(prec, v.H.K.prec)
        if not prec:
            return fn(*args, **kwargs)
        with mpmath.workprec(max(prec, mpmath.mp.prec)):
            return fn(*args, **kwargs)
    return wrapper


def _hodge_from_spaces(K, n: int, spaces: dict[int, CSpace]) -> HodgeFiltration:
    """Filtration from ``p -> F^p`` over a range whose top step is zero.

    Leading steps equal to the whole space are dropped, since the filtration
    is full below its first index anyway.
    """
    keep = {p: S for p, S in spaces.items() if S.dim < n}
    if not keep:
        keep = {max(spaces): spaces[max(spaces)]}
    return HodgeFiltration.from_spaces(n, keep)


def _hodge_range(F: HodgeFiltration) -> range:
    lo, hi = F.p_range
    return range(lo, hi + 1)


def _form_on_gr(Wn: Filtration, w: int, to_old: Callable, old_W: Filtration, Q: Matrix) -> Matrix:
    """Pull back a polarization along a map of graded pieces."""
    new = graded_piece(Wn, w)
    old = graded_piece(old_W, w)
    cols = [old.coordinates(to_old(v)) for v in new.lifts]
    G = Matrix.from_columns(cols, old.dim)
    return G.T @ Q @ G


@_at_places_precision
def restrict(M: MotiveData, U: Subspace, label: str = "") -> MotiveData:
    """The sub-object on ``U`` (which must be stable under all place data)."""
    n, k = M.dim, U.dim
    B = Matrix.from_columns(U.basis, n)
    coords = lambda v: U.coordinates(v)  # noqa: E731
    Wn = Filtration.from_steps(
        k, {w: Subspace.span([coords(b) for b in (S & U).basis], k) for w, S in M.W.steps},
        Subspace.full(k),
    )
    pols = {}
    for w in Wn.gr_dims():
        if graded_piece(Wn, w).dim:
            pols[w] = Polarization.of(w, _form_on_gr(Wn, w, lambda v: B @ v, M.W, M.polarizations[w].form))
    finite = []
    for v in M.finite_places:
        cols = []
        for b in U.basis:
            y = v.N.matrix @ b
            if y not in U:
                raise ValueError(f"subspace is not stable under N at {v.label}")
            cols.append(coords(y))
        finite.append(FinitePlaceData(v.label, v.residue_norm, NilpotentMap.of(Matrix.from_columns(cols, k) if cols else Matrix.zeros(0, 0))))
    arch = []
    for v in M.arch_places:
        K = v.H.K
        Bc = from_columns(K, [cmat(K, [b])[0] for b in U.basis], n)
        spaces = {}
        for p in _hodge_range(v.H.F):
            S = v.H.F[p]
            ann = S.annihilator if S.dim < n else []
            rows = matmul(K, ann, Bc) if ann else []
            spaces[p] = CSpace(K, k, _nullspace(K, rows, k)) if rows else CSpace.full(K, k)
        H = MixedHodgeStructure(k, Wn, _hodge_from_spaces(K, k, spaces), K)
        deligne_bigrading(H)
        arch.append(ArchPlaceData(v.label, v.kind, H))
    out = MotiveData(k, Wn, pols, finite, arch, label or M.label)
    out.__dict__["_embedding"] = [tuple(b) for b in U.basis]
    return out


def _nullspace(K, rows, n):
    from .hodge.field import nullspace
    return nullspace(K, rows, n)


@_at_places_precision
def quotient(M: MotiveData, S: Subspace, label: str = "") -> MotiveData:
    """The quotient object ``M / S``; polarizations via orthogonal complements."""
    n = M.dim
    sq = Subquotient(Subspace.full(n), S)
    k = sq.dim
    C = Matrix.from_columns([sq.coordinates(e) for e in Matrix.identity(n).columns()], k) if k else Matrix.zeros(0, n)
    Wn = Filtration.from_steps(k, {w: sq.image_of(Sw) for w, Sw in M.W.steps}, Subspace.full(k))
    pols = {}
    for w in Wn.gr_dims():
        new = graded_piece(Wn, w)
        if not new.dim:
            continue
        old = graded_piece(M.W, w)
        Q = M.polarizations[w].form
        sub = old.image_of((S & M.W[w]) + M.W[w - 1])
        reps = []
        for v in new.lifts:
            c = Matrix.from_columns([old.coordinates(sq.lift(v))], old.dim)
            if sub.dim:
                Sb = Matrix.from_columns(sub.basis, old.dim)
                # make the representative Q-orthogonal to the killed part
                A = Sb.T @ Q @ Sb
                rhs = (Sb.T @ Q @ c).column(0)
                t = A.solve(rhs)
                if t is None:
                    raise ValueError("polarization is degenerate on the sub-object")
                c = c - Sb @ Matrix.from_columns([t], sub.dim)
            reps.append(c.column(0))
        G = Matrix.from_columns(reps, old.dim)
        pols[w] = Polarization.of(w, G.T @ Q @ G)
    finite = [FinitePlaceData(v.label, v.residue_norm, NilpotentMap.of(sq.induced_map(v.N.matrix, sq)))
              for v in M.finite_places]
    arch = []
    for v in M.arch_places:
        K = v.H.K
        Cc = cmat(K, C.rows)
        spaces = {p: v.H.F[p].image(Cc) if v.H.F[p].dim else CSpace(K, k) for p in _hodge_range(v.H.F)}
        H = MixedHodgeStructure(k, Wn, _hodge_from_spaces(K, k, spaces), K)
        deligne_bigrading(H)
        arch.append(ArchPlaceData(v.label, v.kind, H))
    return MotiveData(k, Wn, pols, finite, arch, label or M.label)


@_at_places_precision
def dual(M: MotiveData) -> MotiveData:
    """``M^*``: weights negate, ``N -> -N^T``, ``F^p = Ann(F^{1-p})``."""
    n = M.dim
    steps = {}
    for w in M.W.jumps:
        # W^*_{-w} = Ann(W_{w-1})
        steps[-w] = Subspace.span(M.W[w - 1].annihilator, n) if M.W[w - 1].dim < n else Subspace.zero(n)
    ws = sorted(steps)
    Wd = Filtration.from_steps(n, {k: steps[k] for k in ws}, Subspace.full(n))
    pols = {}
    for w in M.W.jumps:
        new = graded_piece(Wd, -w)
        old = graded_piece(M.W, w)
        D = Matrix([[sum(a * b for a, b in zip(phi, v)) for v in old.lifts] for phi in new.lifts])
        Q = M.polarizations[w].form
        pols[-w] = Polarization.of(-w, D @ Q.inverse().T @ D.T)
    finite = [FinitePlaceData(v.label, v.residue_norm, NilpotentMap.of(-v.N.matrix.T)) for v in M.finite_places]
    arch = []
    for v in M.arch_places:
        K = v.H.K
        lo, hi = v.H.F.p_range
        spaces = {}
        for p in range(1 - hi, 2 - lo):
            S = v.H.F[1 - p]
            spaces[p] = CSpace(K, n, S.annihilator) if S.dim < n else CSpace(K, n)
        H = MixedHodgeStructure(n, Wd, _hodge_from_spaces(K, n, spaces), K)
        deligne_bigrading(H)
        arch.append(ArchPlaceData(v.label, v.kind, H))
    return MotiveData(n, Wd, pols, finite, arch, f"dual({M.label})")


@_at_places_precision
def tate_twist(M: MotiveData, k: int) -> MotiveData:
    """``M(k)``: weights drop by ``2k`` and ``F^p(M(k)) = F^{p+k}(M)``."""
    if k == 0:
        return M
    Wt = M.W.shifted(-2 * k)
    pols = {w - 2 * k: Polarization.of(w - 2 * k, p.form) for w, p in M.polarizations.items()}
    arch = []
    for v in M.arch_places:
        F = HodgeFiltration(v.H.n, tuple((p - k, S) for p, S in v.H.F.steps))
        H = MixedHodgeStructure(v.H.n, Wt, F, v.H.K)
        deligne_bigrading(H)
        arch.append(ArchPlaceData(v.label, v.kind, H))
    return MotiveData(M.dim, Wt, pols, M.finite_places, arch, f"{M.label}({k})")


@_at_places_precision
def direct_sum(M1: MotiveData, M2: MotiveData) -> MotiveData:
    """Block sum; a place missing from one summand gets trivial data there."""
    n1, n2 = M1.dim, M2.dim
    n = n1 + n2
    emb1 = lambda v: tuple(v) + (Fraction(0),) * n2  # noqa: E731
    emb2 = lambda v: (Fraction(0),) * n1 + tuple(v)  # noqa: E731
    ws = sorted(set(M1.W.jumps) | set(M2.W.jumps))
    W = Filtration.from_steps(
        n, {w: Subspace.span([emb1(b) for b in M1.W[w].basis] + [emb2(b) for b in M2.W[w].basis], n)
            for w in ws}, Subspace.full(n))
    pols = {}
    for w in ws:
        Q1 = M1.polarizations[w].form if w in M1.polarizations else Matrix.zeros(0, 0)
        Q2 = M2.polarizations[w].form if w in M2.polarizations else Matrix.zeros(0, 0)
        a, b = Q1.nrows, Q2.nrows
        rows = [list(Q1.rows[i]) + [0] * b for i in range(a)] + [[0] * a + list(Q2.rows[i]) for i in range(b)]
        form = Matrix(rows, a + b)
        # graded lift basis of the sum is the lifts of M1 followed by those of M2
        new = graded_piece(W, w)
        olds = [emb1(v) for v in graded_piece(M1.W, w).lifts] + [emb2(v) for v in graded_piece(M2.W, w).lifts]
        G = Matrix.from_columns([new.coordinates(v) for v in olds], new.dim)
        Gi = G.inverse()
        pols[w] = Polarization.of(w, Gi.T @ form @ Gi)
    labels = []
    for v in M1.finite_places + M2.finite_places:
        if v.label not in labels:
            labels.append(v.label)
    finite = []
    for lab in labels:
        blocks, norm = [], None
        for M, m in ((M1, n1), (M2, n2)):
            try:
                v = M.place(lab)
                blocks.append(v.N.matrix)
                norm = v.residue_norm
            except KeyError:
                blocks.append(Matrix.zeros(m, m))
        finite.append(FinitePlaceData(lab, norm, NilpotentMap.of(_block_diag(blocks[0], blocks[1]))))
    arch = []
    for v1 in M1.arch_places:
        v2 = M2.place(v1.label)
        K = v1.H.K if not v1.H.K.exact else v2.H.K
        lo = min(v1.H.F.p_range[0], v2.H.F.p_range[0])
        hi = max(v1.H.F.p_range[1], v2.H.F.p_range[1])
        spaces = {}
        for p in range(lo, hi + 1):
            a = [list(map(K, x)) + [K.zero] * n2 for x in v1.H.F[p].basis]
            b = [[K.zero] * n1 + list(map(K, x)) for x in v2.H.F[p].basis]
            spaces[p] = CSpace(K, n, a + b)
        H = MixedHodgeStructure(n, W, _hodge_from_spaces(K, n, spaces), K)
        deligne_bigrading(H)
        arch.append(ArchPlaceData(v1.label, v1.kind, H))
    return MotiveData(n, W, pols, finite, arch, f"{M1.label}+{M2.label}")


def _block_diag(A: Matrix, B: Matrix) -> Matrix:
    a, b = A.nrows, B.nrows
    rows = [list(A.rows[i]) + [0] * b for i in range(a)] + [[0] * a + list(B.rows[i]) for i in range(b)]
    return Matrix(rows, a + b) if rows else Matrix.zeros(0, 0)


def pullback(E: MotiveData, pi: Matrix, A2: MotiveData, f: Matrix) -> MotiveData:
    """Fibre product ``E x_A A2`` of ``pi: E -> A`` and ``f: A2 -> A``.

    ``pi`` and ``f`` are matrices into the coordinates of ``A``; the result
    lives in ``E ⊕ A2`` as the kernel of ``(pi, -f)``.
    """
    S = direct_sum(E, A2)
    rows = [list(pi.rows[i]) + [-x for x in f.rows[i]] for i in range(pi.nrows)]
    ker = Matrix(rows, S.dim).kernel()
    out = restrict(S, ker, f"pullback({E.label})")
    out.polarizations.update(_pullback_forms(out, E, A2))
    return out


def _pullback_forms(Pb: MotiveData, E: MotiveData, A2: MotiveData) -> dict:
    """Polarize ``gr_w`` of a fibre product as an extension of ``A2`` by ``ker(pi)``.

    ``K_w``, the kernel of ``gr_w Pb -> gr_w A2``, keeps the form of ``E``; its
    orthogonal complement (for the form induced from ``E ⊕ A2``) takes the
    form of ``A2`` through the projection.  Pulling back along an identity
    then returns ``E`` with its own polarization.
    """
    nE = E.dim
    emb = Matrix.from_columns(Pb.__dict__["_embedding"], nE + A2.dim)
    out = {}
    for w, pol in Pb.polarizations.items():
        lifts = [(emb @ Matrix.from_columns([v], Pb.dim)).column(0) for v in graded_piece(Pb.W, w).lifts]
        m = len(lifts)
        grE, grA = graded_piece(E.W, w), graded_piece(A2.W, w)
        GE = Matrix.from_columns([grE.coordinates(v[:nE]) for v in lifts], grE.dim) if grE.dim else Matrix.zeros(0, m)
        GA = Matrix.from_columns([grA.coordinates(v[nE:]) for v in lifts], grA.dim) if grA.dim else Matrix.zeros(0, m)
        QA = GA.T @ A2.polarizations[w].form @ GA if grA.dim else Matrix.zeros(m, m)
        Kb = GA.kernel() if grA.dim else Subspace.full(m)
        if Kb.is_zero():
            out[w] = Polarization.of(w, QA)
            continue
        QE = GE.T @ E.polarizations[w].form @ GE
        Kmat = Matrix.from_columns(Kb.basis, m)
        Qs = pol.form
        proj = Kmat @ (Kmat.T @ Qs @ Kmat).inverse() @ Kmat.T @ Qs
        out[w] = Polarization.of(w, proj.T @ QE @ proj + QA)
    return out


def pushout(E: MotiveData, iota: Matrix, B2: MotiveData, g: Matrix) -> MotiveData:
    """``(E ⊕ B2) / {(iota b, -g b)}`` for ``iota: B -> E`` and ``g: B -> B2``."""
    S = direct_sum(E, B2)
    gens = [tuple(iota.column(j)) + tuple(-x for x in g.column(j)) for j in range(iota.ncols)]
    killed = Subspace.span(gens, S.dim)
    out = quotient(S, killed, f"pushout({E.label})")
    out.polarizations.update(_pushout_forms(out, S, killed, E, iota, B2))
    return out


def _pushout_forms(Po: MotiveData, S: MotiveData, killed: Subspace, E: MotiveData,
                   iota: Matrix, B2: MotiveData) -> dict:
    """Polarize ``gr_w`` of a pushout as an extension of ``E / iota(B)`` by ``B2``.

    The image of ``B2`` keeps its own form; the quotient ``E / iota(B)``
    contributes its form through the projection, on the complement that is
    orthogonal for the form induced from ``E ⊕ B2``.  Where ``B2`` does not
    embed at the graded level the induced form is kept.
    """
    nE = E.dim
    sq = Subquotient(Subspace.full(S.dim), killed)
    img = Subspace.span(iota.columns(), nE) if iota.ncols else Subspace.zero(nE)
    EQ = quotient(E, img)
    sq2 = Subquotient(Subspace.full(nE), img)
    out = {}
    for w, pol in Po.polarizations.items():
        gr = graded_piece(Po.W, w)
        lifts = [sq.lift(v) for v in gr.lifts]
        grC = graded_piece(EQ.W, w)
        GC = Matrix.from_columns([grC.coordinates(sq2.coordinates(x[:nE])) for x in lifts], grC.dim) \
            if grC.dim else Matrix.zeros(0, gr.dim)
        QC = GC.T @ EQ.polarizations[w].form @ GC if grC.dim else Matrix.zeros(gr.dim, gr.dim)
        grB = graded_piece(B2.W, w)
        if not grB.dim:
            out[w] = Polarization.of(w, QC)
            continue
        Phi = Matrix.from_columns(
            [gr.coordinates(sq.coordinates((Fraction(0),) * nE + tuple(u))) for u in grB.lifts], gr.dim)
        if Phi.rank() < grB.dim:
            continue
        Qs = pol.form
        Y = (Phi.T @ Qs @ Phi).inverse() @ Phi.T @ Qs
        out[w] = Polarization.of(w, Y.T @ B2.polarizations[w].form @ Y + QC)
    return out


def extension_calculus(op: str, *args, **kwargs):
    """Dispatch for ``dual``, ``tate_twist``, ``pullback`` and ``pushout``."""
    ops = {"dual": dual, "tate_twist": tate_twist, "pullback": pullback, "pushout": pushout}
    if op not in ops:
        raise ValueError(f"unknown operation {op!r}")
    return ops[op](*args, **kwargs)


# --------------------------------------------------------------------------
# the d = 1 reduction
# --------------------------------------------------------------------------

def _flat(A: Matrix) -> tuple:
    return tuple(x for r in A.rows for x in r)


def _outer(col: Sequence, row: Sequence) -> list[list]:
    return [[c * r for r in row] for c in col]


def _gr_hodge_basis(H: MixedHodgeStructure, w: int):
    """Hodge basis of ``gr^W_w`` in its lift coordinates: list of ``(p, q, vector)``."""
    from .hodge.metric import _gr_coords

    big = deligne_bigrading(H)
    out = []
    for p, q, vs in big.blocks:
        if p + q == w:
            for c in _gr_coords(H.K, H.W, w, vs):
                out.append((p, q, c))
    return out


def hom_pure(H: MixedHodgeStructure, w: int, wt: int):
    """Hodge decomposition of ``Hom(gr_w, gr_wt)`` on row-major vectorised matrices.

    Returns ``(basis, types)``: the basis vectors ``b ⊗ α`` with ``α`` the
    dual basis of a Hodge basis of ``gr_w`` and their types.
    """
    K = H.K
    src = _gr_hodge_basis(H, w)
    tgt = _gr_hodge_basis(H, wt)
    m = len(src)
    T = from_columns(K, [v for _, _, v in src], m)
    Ti = inverse(K, T)
    basis, types = [], []
    for (pt, qt, b) in tgt:
        for j, (ps, qs, _) in enumerate(src):
            M = _outer(b, Ti[j])
            basis.append([x for r in M for x in r])
            types.append((pt - ps, qt - qs))
    return basis, types


@dataclass(frozen=True)
class BBData:
    """Intermediate objects of the d = 1 reduction."""

    Q: MotiveData
    Qdual_twist: MotiveData
    Qprime: MotiveData
    R: MotiveData
    P: object


@_at_places_precision
def bb_extension_Q(M: MotiveData, w: int, polP: Matrix | None = None):
    """The extension ``0 -> P -> Q -> Q(0) -> 0`` attached to ``W_w M / W_{w-2} M``.

    ``Q`` is the space of maps ``f: gr_w -> W_w/W_{w-2}`` whose composite with
    the projection is a multiple of the identity.  Basis: the section ``s``
    given by the lift basis, then ``P = Hom(gr_w, gr_{w-1})`` row-major.
    At archimedean places ``F^0 Q`` is generated over ``s`` by ``s + x``
    with ``x`` taken in the conjugate of ``F^0 P``.  Returns ``(Q, polP)``.
    """
    A = graded_piece(M.W, w)
    B = graded_piece(M.W, w - 1)
    a, b = A.dim, B.dim
    if not a or not b:
        raise ValueError(f"gr_{w} or gr_{w - 1} is zero")
    m = a * b
    n = m + 1
    if polP is None:
        Qs = M.polarizations[w].form
        Qt = M.polarizations[w - 1].form
        Qsi = Qs.inverse()
        rows = []
        for i in range(b):
            for j in range(a):
                row = []
                for k in range(b):
                    for l in range(a):
                        # tr(E_ij^T Qt E_kl Qs^{-1}) = Qt[i][k] * Qsi[l][j]
                        row.append(Qt[i, k] * Qsi[l, j])
                rows.append(row)
        polP = Matrix(rows, m)
    weights = [0] + [-1] * m
    W = Filtration.from_weights(weights)
    pols = {0: Polarization.of(0, [[1]]), -1: Polarization.of(-1, polP)}
    finite = []
    for v in M.finite_places:
        Nm = v.N.matrix
        NA = A.induced_map(Nm, A)
        NB = B.induced_map(Nm, B)
        # n = N∘ι - ι∘N_A, read in gr_{w-1}
        ncols = []
        for j, lj in enumerate(A.lifts):
            y = list(Nm @ lj)
            for k, lk in enumerate(A.lifts):
                c = NA[k, j]
                if c:
                    y = [yy - c * x for yy, x in zip(y, lk)]
            ncols.append(B.coordinates(tuple(y)))
        nvec = _flat(Matrix.from_columns(ncols, b))
        # Ad on P: f -> N_B f - f N_A
        adP = []
        for idx in range(m):
            E = [[Fraction(int(i * a + j == idx)) for j in range(a)] for i in range(b)]
            Em = Matrix(E, a)
            adP.append(_flat(NB @ Em - Em @ NA))
        NQ = [[Fraction(0)] * n for _ in range(n)]
        for i in range(m):
            NQ[1 + i][0] = nvec[i]
            for j in range(m):
                NQ[1 + i][1 + j] = adP[j][i]
        finite.append(FinitePlaceData(v.label, v.residue_norm, NilpotentMap.of(Matrix(NQ))))
    arch = []
    for v in M.arch_places:
        H = v.H
        K = H.K
        big = deligne_bigrading(H)
        # x(a_j) = -(weight w-1 part of the bigrading decomposition of a_j)
        T = big.basis_matrix()
        Ti = inverse(K, T)
        lab = big.labels()
        xcols = []
        for lj in A.lifts:
            c = [sum((Ti[r][s] * K(lj[s]) for s in range(M.dim)), K.zero) for r in range(M.dim)]
            part = [K.zero] * M.dim
            for r, (p, q) in enumerate(lab):
                if p + q == w - 1 and c[r]:
                    for s in range(M.dim):
                        part[s] = part[s] - c[r] * T[s][r]
            from .hodge.metric import _gr_coords
            xcols.append(_gr_coords(K, M.W, w - 1, [part])[0])
        X = [[xcols[j][i] for j in range(a)] for i in range(b)]
        xvec = [x for r in X for x in r]
        hb, types = hom_pure(H, w, w - 1)
        Hb = from_columns(K, hb, m)
        coeff = matmul(K, inverse(K, Hb), [[x] for x in xvec])
        # keep the components of type (a, b) with a <= -1
        xn = [K.zero] * m
        for k, (ta, _) in enumerate(types):
            if ta <= -1:
                for i in range(m):
                    xn[i] = xn[i] + coeff[k][0] * hb[k][i]
        tas = [ta for ta, _ in types]
        spaces = {}
        for p in range(min(min(tas), 0), max(max(tas), 0) + 2):
            gens = [[K.zero] + list(hb[k]) for k, ta in enumerate(tas) if ta >= p]
            if p <= 0:
                gens.append([K.one] + xn)
            spaces[p] = CSpace(K, n, gens)
        HQ = MixedHodgeStructure(n, W, _hodge_from_spaces(K, n, spaces), K)
        deligne_bigrading(HQ)
        arch.append(ArchPlaceData(v.label, v.kind, HQ))
    return MotiveData(n, W, pols, finite, arch, f"Q({M.label},{w})"), polP


def beilinson_bloch_reduction(M: MotiveData, w: int, polP: Matrix | None = None,
                              ctx: HodgeContext | None = None, lift_shift: Fraction = Fraction(0),
                              details: bool = False):
    """``h_{w,1}(M) = h_{0,2}(R)``.

    Builds ``Q``, then ``Q^*(1)`` and its pullback ``Q'`` along the
    polarization ``P -> P^*(1)``, then an extension ``R`` of ``Q(0)`` by
    ``Q'`` lifting ``Q``.  The lift is fixed by solving for the place data
    of the new basis vector ``r`` with free variables zero, then adding
    ``lift_shift`` times the ``Q(1)`` basis vector.  At archimedean places a
    rational shift gives an isomorphic ``R``; at finite places it changes
    the extension class.

    Returns ``(R, h)`` (or ``(BBData, h)`` with ``details=True``).
    """
    ctx = ctx or HodgeContext()
    Qm, polP = bb_extension_Q(M, w, polP)
    m = Qm.dim - 1
    Qd = tate_twist(dual(Qm), 1)
    # restriction Q^*(1) -> P^*(1): drop the s^* coordinate
    restr = Matrix([[Fraction(int(j == i + 1)) for j in range(m + 1)] for i in range(m)])
    # polarization P -> P^*(1): y -> polP(y, .)
    Pm = restrict(Qm, Qm.W[-1], "P")
    Qp = pullback(Qd, restr, Pm, polP.T)
    R = _lift_R(Qm, Qp, m, lift_shift)
    h, _ = global_height_wd(R, 0, 2, ctx)
    if details:
        return BBData(Qm, Qd, Qp, R, polP), h
    return R, h


@_at_places_precision
def _lift_R(Qm: MotiveData, Qp: MotiveData, m: int, shift: Fraction) -> MotiveData:
    """Extension of ``Q(0)`` by ``Q'`` whose quotient by ``Q(1)`` is ``Q``."""
    k = Qp.dim               # m + 1
    n = k + 1                # new vector r first, then Q' coordinates
    # projection Q' -> P: Q' sits in Q^*(1) ⊕ P; the P block is the last m coordinates
    proj_rows = []
    amb = _qp_embedding(Qp, m)
    for i in range(m):
        proj_rows.append([amb[j][m + 1 + i] for j in range(k)])
    proj = Matrix(proj_rows, k)
    kerp = proj.kernel()
    if kerp.dim != 1:
        raise NoLift("the map Q' -> P does not have a one-dimensional kernel")
    zvec = kerp.basis[0]
    Wsteps = {}
    for wt in (0, -1, -2):
        S = Qp.W[wt]
        gens = [(Fraction(0),) + tuple(b) for b in S.basis]
        if wt == 0:
            gens.append((Fraction(1),) + (Fraction(0),) * k)
        Wsteps[wt] = Subspace.span(gens, n)
    W = Filtration.from_steps(n, Wsteps, Subspace.full(n))
    # polarizations
    pols = {0: Polarization.of(0, [[1]])}
    for wt in (-1, -2):
        new = graded_piece(W, wt)
        old = graded_piece(Qp.W, wt)
        if not new.dim:
            continue
        G = Matrix.from_columns([old.coordinates(tuple(v[1:])) for v in new.lifts], old.dim)
        pols[wt] = Polarization.of(wt, G.T @ Qp.polarizations[wt].form @ G)
    finite = []
    for v in Qp.finite_places:
        vq = Qm.place(v.label)
        target = [vq.N.matrix[1 + i, 0] for i in range(m)]
        xi = proj.solve(target)
        if xi is None:
            raise NoLift(f"no lift of the monodromy at {v.label}")
        xi = [x + shift * z for x, z in zip(xi, zvec)]
        Nn = [[Fraction(0)] * n for _ in range(n)]
        for i in range(k):
            Nn[1 + i][0] = xi[i]
            for j in range(k):
                Nn[1 + i][1 + j] = v.N.matrix[i, j]
        finite.append(FinitePlaceData(v.label, v.residue_norm, NilpotentMap.of(Matrix(Nn))))
    arch = []
    for v in Qp.arch_places:
        K = v.H.K
        vq = Qm.place(v.label)
        xP = _normalized_datum(K, vq.H)
        xi = ksolve(K, cmat(K, proj.rows), xP)
        if xi is None:
            raise NoLift(f"no lift of the Hodge datum at {v.label}")
        xi = [x + K(shift) * K(z) for x, z in zip(xi, zvec)]
        lo, hi = v.H.F.p_range
        spaces = {}
        for p in range(min(lo, -1), max(hi, 1) + 1):
            gens = [[K.zero] + list(b) for b in v.H.F[p].basis]
            if p <= 0:
                gens.append([K.one] + list(xi))
            spaces[p] = CSpace(K, n, gens)
        H = MixedHodgeStructure(n, W, _hodge_from_spaces(K, n, spaces), K)
        deligne_bigrading(H)
        arch.append(ArchPlaceData(v.label, v.kind, H))
    return MotiveData(n, W, pols, finite, arch, "R")


def _normalized_datum(K, HQ: MixedHodgeStructure) -> list:
    """``x`` with ``s + x`` in ``F^0 Q`` and ``x`` in the conjugate of ``F^0 P``."""
    n = HQ.n
    F0 = HQ.F[0]
    gen = None
    for b in F0.basis:
        if not K.is_zero(b[0]):
            gen = [y / b[0] for y in b]
            break
    if gen is None:
        raise NoLift("F^0 Q has no vector over s")
    F0P = F0 & HQ.W_space(-1)
    cols = [list(b) for b in F0P.basis] + [[-y for y in b] for b in F0P.conjugate().basis]
    if not cols:
        return gen[1:]
    c = ksolve(K, from_columns(K, cols, n), [K.zero] + [-y for y in gen[1:]])
    if c is None:
        raise NoLift("the weight -1 part of Q is not pure")
    y = [sum((c[j] * cols[j][i] for j in range(F0P.dim)), K.zero) for i in range(n)]
    return [gen[i] + y[i] for i in range(1, n)]


def _qp_embedding(Qp: MotiveData, m: int) -> list:
    """Columns of ``Q'`` in ``Q^*(1) ⊕ P`` coordinates (stored with the object)."""
    emb = Qp.__dict__.get("_embedding")
    if emb is None:
        raise NoLift("Q' was not built by pullback")
    return emb
