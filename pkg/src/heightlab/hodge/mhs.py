"""Mixed Hodge structures, their bigrading and the ``(δ, F̃)`` splitting."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath

from ..qlinalg import Filtration, graded_piece
from .field import (
    CSpace,
    at_field_precision,
    field_precision,
    cmat,
    conj,
    detect_field,
    from_columns,
    inverse,
    matmul,
    mscale,
    nilpotent_exp,
    solve,
    unipotent_log,
    zeros,
)

__all__ = [
    "MHSAxiomViolation",
    "NonConvergence",
    "HodgeFiltration",
    "MixedHodgeStructure",
    "Bigrading",
    "RealSplitting",
    "SplittingData",
    "deligne_bigrading",
    "delta_splitting",
    "is_r_split",
    "bidegree_components",
    "delta_component",
]


class MHSAxiomViolation(ValueError):
    pass


class NonConvergence(ArithmeticError):
    """A residual stayed above tolerance; the working precision is too low."""


@dataclass(frozen=True)
class HodgeFiltration:
    """Decreasing filtration ``F^p`` of ``K^n`` given at some indices.

    Below the first index ``F^p`` is the whole space, above the last it is
    zero, and between two given indices it equals the step at the next
    given index.
    """

    n: int
    steps: tuple          # ((p, CSpace), ...) with p increasing, spaces decreasing

    @classmethod
    def from_generators(cls, K, n: int, gens: Mapping[int, Sequence[Sequence]]) -> "HodgeFiltration":
        items = sorted(gens.items())
        steps = []
        prev = None
        for p, vecs in items:
            S = CSpace(K, n, cmat(K, vecs))
            if prev is not None and not prev.contains(S):
                raise MHSAxiomViolation(f"F is not decreasing at p={p}")
            steps.append((p, S))
            prev = S
        return cls(n, tuple(steps))

    @classmethod
    def from_spaces(cls, n: int, spaces: Mapping[int, CSpace]) -> "HodgeFiltration":
        return cls(n, tuple(sorted(spaces.items())))

    def __getitem__(self, p: int) -> CSpace:
        if not self.steps:
            raise ValueError("empty Hodge filtration")
        K = self.steps[0][1].K
        if p < self.steps[0][0]:
            return CSpace.full(K, self.n)
        for idx, S in self.steps:
            if idx >= p:
                return S
        return CSpace(K, self.n)

    @property
    def p_range(self) -> tuple[int, int]:
        return self.steps[0][0] - 1, self.steps[-1][0] + 1

    def image(self, g) -> "HodgeFiltration":
        return HodgeFiltration(self.n, tuple((p, S.image(g)) for p, S in self.steps))

    def conjugate(self) -> "HodgeFiltration":
        return HodgeFiltration(self.n, tuple((p, S.conjugate()) for p, S in self.steps))

    def distance(self, other: "HodgeFiltration") -> mpmath.mpf:
        lo = min(self.p_range[0], other.p_range[0])
        hi = max(self.p_range[1], other.p_range[1])
        return max(self[p].distance(other[p]) for p in range(lo, hi + 1))


@dataclass(frozen=True)
class MixedHodgeStructure:
    """Rational weight filtration plus a complex Hodge filtration on ``K^n``.

    ``F`` maps ``p`` to generators (rows are vectors) of ``F^p``; indices
    missing below the first are the whole space.
    """

    n: int
    W: Filtration
    F: HodgeFiltration
    K: object = field(repr=False)

    @classmethod
    def build(cls, W: Filtration, F: Mapping[int, Sequence[Sequence]], K=None, prec: int = 128):
        n = W.ambient
        if K is None:
            K = detect_field([x for vecs in F.values() for v in vecs for x in v], prec)
        with field_precision(K):
            H = cls(n, W, HodgeFiltration.from_generators(K, n, F), K)
            deligne_bigrading(H)
        return H

    def W_space(self, w: int) -> CSpace:
        return CSpace(self.K, self.n, cmat(self.K, self.W[w].basis))

    def with_filtration(self, F: HodgeFiltration) -> "MixedHodgeStructure":
        return MixedHodgeStructure(self.n, self.W, F, self.K)


@dataclass(frozen=True)
class Bigrading:
    """``I^{p,q}`` as a list of ``(p, q, basis vectors)`` with a joint basis matrix."""

    K: object = field(repr=False)
    n: int
    blocks: tuple     # ((p, q, [vectors]), ...)

    def basis_matrix(self) -> list[list]:
        cols = [v for _, _, vs in self.blocks for v in vs]
        return from_columns(self.K, cols, self.n)

    def labels(self) -> list[tuple[int, int]]:
        return [(p, q) for p, q, vs in self.blocks for _ in vs]

    def dims(self) -> dict[tuple[int, int], int]:
        return {(p, q): len(vs) for p, q, vs in self.blocks}

    def space(self, p: int, q: int) -> CSpace:
        for a, b, vs in self.blocks:
            if (a, b) == (p, q):
                return CSpace(self.K, self.n, vs)
        return CSpace(self.K, self.n)


@at_field_precision
def deligne_bigrading(H: MixedHodgeStructure) -> Bigrading:
    """``I^{p,q} = F^p ∩ W_{p+q} ∩ (conj F^q ∩ W_{p+q} + Σ_{j>=1} conj F^{q-j} ∩ W_{p+q-j-1})``."""
    cached = H.__dict__.get("_bigrading")
    if cached is not None:
        return cached
    big = _deligne_bigrading(H)
    object.__setattr__(H, "_bigrading", big)
    return big


def _deligne_bigrading(H: MixedHodgeStructure) -> Bigrading:
    K, n = H.K, H.n
    if not H.W.steps:
        return Bigrading(K, n, ())
    Fb = H.F.conjugate()
    plo, phi = H.F.p_range
    wlo, whi = H.W.lowest, H.W.highest
    Wsp = {w: H.W_space(w) for w in range(wlo - (phi - plo) - 2, whi + 1)}

    def Wc(w: int) -> CSpace:
        if w < wlo:
            return CSpace(K, n)
        return Wsp.get(w, CSpace.full(K, n)) if w <= whi else CSpace.full(K, n)

    blocks = []
    total = 0
    for w in range(wlo, whi + 1):
        for p in range(phi, plo - 1, -1):
            q = w - p
            inner = Fb[q] & Wc(w)
            for j in range(1, (phi - plo) + (whi - wlo) + 2):
                inner = inner + (Fb[q - j] & Wc(w - j - 1))
            I = H.F[p] & Wc(w) & inner
            if I.dim:
                blocks.append((p, q, [list(v) for v in I.basis]))
                total += I.dim
    big = Bigrading(K, n, tuple(blocks))
    if total != n or CSpace(K, n, [v for _, _, vs in blocks for v in vs]).dim != n:
        raise MHSAxiomViolation("the Deligne bigrading does not span: (W, F) is not a mixed Hodge structure")
    # F^p and W_w must be recovered from the bigrading
    for p in range(plo, phi + 1):
        S = CSpace(K, n, [v for a, _, vs in blocks if a >= p for v in vs])
        if not (S.contains(H.F[p]) and H.F[p].contains(S)):
            raise MHSAxiomViolation(f"F^{p} is not the sum of the I^(p',q) with p' >= {p}")
    for w in range(wlo, whi + 1):
        S = CSpace(K, n, [v for a, b, vs in blocks if a + b <= w for v in vs])
        if S.dim != H.W[w].dim:
            raise MHSAxiomViolation(f"W_{w} is not the sum of the I^(p,q) with p+q <= {w}")
    dims = big.dims()
    for (p, q), d in dims.items():
        if dims.get((q, p), 0) != d:
            raise MHSAxiomViolation(f"dim I^({p},{q}) differs from dim I^({q},{p})")
    return big


def bidegree_components(K, big: Bigrading, X: list[list]) -> dict[tuple[int, int], list[list]]:
    """Split an endomorphism into its ``(a, b)`` components relative to ``big``."""
    T = big.basis_matrix()
    Ti = inverse(K, T)
    Y = matmul(K, matmul(K, Ti, X), T)
    lab = big.labels()
    n = len(lab)
    out: dict[tuple[int, int], list[list]] = {}
    for i in range(n):
        for j in range(n):
            if not K.is_zero(Y[i][j]):
                key = (lab[i][0] - lab[j][0], lab[i][1] - lab[j][1])
                out.setdefault(key, zeros(K, n, n))[i][j] = Y[i][j]
    return {k: matmul(K, matmul(K, T, M), Ti) for k, M in out.items()}


@at_field_precision
def is_r_split(H: MixedHodgeStructure, big: Bigrading | None = None) -> bool:
    big = big or deligne_bigrading(H)
    for p, q, vs in big.blocks:
        I_qp = big.space(q, p)
        bar = CSpace(H.K, H.n, conj(vs))
        if not (I_qp.contains(bar) and bar.contains(I_qp)):
            return False
    return True


# --------------------------------------------------------------------------
# the (δ, F̃) splitting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RealSplitting:
    """``H_R = ⊕ U_w`` with real bases, a splitting of ``W``."""

    K: object = field(repr=False)
    n: int
    pieces: tuple        # ((w, [real column vectors]), ...)

    def basis_matrix(self) -> list[list]:
        return from_columns(self.K, [v for _, vs in self.pieces for v in vs], self.n)

    def projector(self, w: int) -> list[list]:
        K = self.K
        B = self.basis_matrix()
        Bi = inverse(K, B)
        mask = [w == ww for ww, vs in self.pieces for _ in vs]
        D = [[K.one if i == j and mask[i] else K.zero for j in range(self.n)] for i in range(self.n)]
        return matmul(K, matmul(K, B, D), Bi)

    def weights(self) -> tuple[int, ...]:
        return tuple(w for w, _ in self.pieces)


@dataclass(frozen=True)
class SplittingData:
    delta: list = field(repr=False)
    Ftilde: HodgeFiltration = field(repr=False)
    bigrading: Bigrading = field(repr=False)          # of (W, F)
    tilde_bigrading: Bigrading = field(repr=False)    # of (W, F̃)
    zeta: list | None = field(default=None, repr=False)
    Fhat: HodgeFiltration | None = field(default=None, repr=False)
    real_splitting: RealSplitting | None = None
    residual: object = None


@at_field_precision
def delta_splitting(H: MixedHodgeStructure, tol=None) -> SplittingData:
    """The unique real ``δ`` in ``L^{-1,-1}`` with ``(W, exp(-iδ) F)`` split over ``R``.

    With ``T`` a basis adapted to the bigrading ``I`` of ``(W, F)``, the
    unipotent ``g = exp(-2iδ)`` is the unique element of ``exp(L^{-1,-1})``
    carrying ``I^{q,p}`` onto ``conj(I^{p,q})``: in ``T`` coordinates it is
    ``S P^{-1}`` where ``S = T^{-1} conj(T)`` and ``P`` keeps only the
    ``I^{q,p}`` blocks of ``S``.  Then ``δ = (i/2) log g``.

    ``F̃`` is assembled from the conjugate side,
    ``J^{p,q} = exp(iδ) conj(I^{q,p})``, so that ``F = exp(iδ) F̃`` is a
    genuine check on ``δ`` rather than an identity.
    """
    K, n = H.K, H.n
    big = deligne_bigrading(H)
    T = big.basis_matrix()
    Ti = inverse(K, T)
    S = matmul(K, Ti, conj(T))
    lab = big.labels()
    P = zeros(K, n, n)
    for j, (p, q) in enumerate(lab):
        for i, (a, b) in enumerate(lab):
            if (a, b) == (q, p):
                P[i][j] = S[i][j]
            elif not K.is_zero(S[i][j]) and not (a < q and b < p):
                raise MHSAxiomViolation("conjugate bigrading is not congruent to I^{q,p}")
    h = matmul(K, S, inverse(K, P))
    for i, (a, b) in enumerate(lab):
        for j, (c, d) in enumerate(lab):
            x = h[i][j]
            if i == j:
                continue
            if not K.is_zero(x) and not (a < c and b < d):
                raise MHSAxiomViolation("g is not in exp(L^{-1,-1})")
    g = matmul(K, matmul(K, T, h), Ti)
    L = unipotent_log(K, g)
    half_i = K.i * K(Fraction(1, 2))
    dc = mscale(half_i, L)
    delta = _real_matrix(K, dc, "δ")

    E = nilpotent_exp(K, mscale(K.i, delta))
    J_blocks = []
    for p, q, _ in big.blocks:
        src = big.space(q, p)
        vecs = [[x for x in v] for v in conj(src.basis)]
        J_blocks.append((p, q, [_matvec_col(K, E, v) for v in vecs]))
    tb = Bigrading(K, n, tuple(J_blocks))
    plo, phi = H.F.p_range
    Ft = HodgeFiltration.from_spaces(n, {
        p: CSpace(K, n, [v for a, _, vs in J_blocks if a >= p for v in vs])
        for p in range(plo + 1, phi)
    })
    recon = Ft.image(E)
    residual = H.F.distance(recon)
    if tol is not None and residual > tol:
        raise NonConvergence(f"reconstruction residual {mpmath.nstr(residual, 5)} above tolerance")
    return SplittingData(delta, Ft, big, tb, residual=residual)


def _matvec_col(K, M, v):
    return [sum((M[i][j] * v[j] for j in range(len(v)) if v[j]), K.zero) for i in range(len(M))]


def _real_matrix(K, M, name: str) -> list[list]:
    out = []
    for r in M:
        row = []
        for x in r:
            if K.exact:
                if x.im:
                    raise MHSAxiomViolation(f"{name} is not real")
                row.append(K(x.re))
            else:
                if abs(x.imag) > K.tol * 1024:
                    raise NonConvergence(f"{name} has imaginary part {mpmath.nstr(abs(x.imag), 5)}")
                row.append(mpmath.mpc(x.real, 0))
        out.append(row)
    return out


@at_field_precision
def complete_splitting(H: MixedHodgeStructure, sd: SplittingData, zeta: list[list]) -> SplittingData:
    """Attach ``ζ``, ``F̂ = exp(ζ) F̃`` and the real splitting of ``W`` it defines."""
    K, n = H.K, H.n
    zeta = _real_matrix(K, zeta, "ζ")
    Z = nilpotent_exp(K, zeta)
    Fhat = sd.Ftilde.image(Z)
    by_w: dict[int, list] = {}
    for p, q, vs in sd.tilde_bigrading.blocks:
        by_w.setdefault(p + q, []).extend(_matvec_col(K, Z, v) for v in vs)
    pieces = []
    for w in sorted(by_w):
        sp = CSpace(K, n, by_w[w])
        if not (sp.conjugate().contains(sp)):
            raise MHSAxiomViolation(f"U_{w} is not defined over R")
        pieces.append((w, _real_basis(K, sp)))
    rs = RealSplitting(K, n, tuple(pieces))
    return SplittingData(sd.delta, sd.Ftilde, sd.bigrading, sd.tilde_bigrading,
                         zeta, Fhat, rs, sd.residual)


def _real_basis(K, sp: CSpace) -> list[list]:
    """A real basis of a conjugation-stable subspace (echelon form is real)."""
    out = []
    for v in sp.basis:
        if K.exact:
            out.append([K(x.re) for x in v])
        else:
            out.append([mpmath.mpc(x.real, 0) for x in v])
    return out


@at_field_precision
def delta_component(H: MixedHodgeStructure, sd: SplittingData, w: int, d: int) -> list[list]:
    """``δ_{w,d}: gr^W_w -> gr^W_{w-d}`` in the lift bases of the two graded pieces.

    Uses the weight ``-d`` part of ``δ`` relative to the real splitting of
    ``W`` attached to ``F̂``.
    """
    K, n = H.K, H.n
    src = graded_piece(H.W, w)
    tgt = graded_piece(H.W, w - d)
    if src.dim == 0 or tgt.dim == 0:
        return zeros(K, tgt.dim, src.dim)
    rs = sd.real_splitting
    if rs is None:
        raise ValueError("splitting data lacks the real splitting")
    Pw = rs.projector(w)
    Pt = rs.projector(w - d)
    M = matmul(K, Pt, matmul(K, sd.delta, Pw))
    lifts_t = [cmat(K, [v])[0] for v in tgt.lifts]
    low = [cmat(K, [v])[0] for v in H.W[w - d - 1].basis]
    A = from_columns(K, lifts_t + low, n)
    cols = []
    for v in src.lifts:
        y = _matvec_col(K, M, cmat(K, [v])[0])
        c = solve(K, A, y)
        if c is None:
            raise MHSAxiomViolation("weight component does not land in W_{w-d}")
        cols.append(c[:tgt.dim])
    return from_columns(K, cols, tgt.dim)
