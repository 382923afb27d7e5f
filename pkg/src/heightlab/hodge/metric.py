"""Weil operators, Hodge metrics and archimedean heights."""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath

from ..qlinalg import Matrix, graded_piece
from .field import (
    at_field_precision,
    cmat,
    from_columns,
    inverse,
    matmul,
    solve,
    transpose,
)
from .mhs import (
    MixedHodgeStructure,
    SplittingData,
    complete_splitting,
    delta_component,
    delta_splitting,
)
from .zeta import ZetaTable, default_zeta_table, evaluate_zeta

__all__ = [
    "NotPositiveDefinite",
    "HodgeContext",
    "HodgeMetric",
    "weil_operator",
    "hodge_metric",
    "full_splitting",
    "p_metric",
    "archimedean_height",
    "archimedean_local_height",
    "PLACE_FACTOR",
]

PLACE_FACTOR = {"real": 1, "complex": 2}


class NotPositiveDefinite(ValueError):
    pass


@dataclass(frozen=True)
class HodgeContext:
    """Working precision (bits), residual tolerance and the ``ζ`` table."""

    prec: int = 128
    tol: float = 1e-20
    zeta_table: ZetaTable = field(default_factory=default_zeta_table)

    def with_table(self, table: ZetaTable) -> "HodgeContext":
        return HodgeContext(self.prec, self.tol, table)


@dataclass(frozen=True)
class HodgeMetric:
    """Hermitian matrix ``H`` with ``(x, y) = y^* H x``."""

    matrix: list = field(repr=False)
    eigenvalues: tuple = ()

    def __call__(self, x, y):
        n = len(self.matrix)
        s = mpmath.mpc(0)
        for i in range(n):
            for j in range(n):
                s += mpmath.conj(y[i]) * self.matrix[i][j] * x[j]
        return s


def _gr_coords(K, W, w: int, vectors) -> list[list]:
    """Coordinates in the lift basis of ``gr^W_w`` of vectors lying in ``W_w``."""
    gp = graded_piece(W, w)
    n = W.ambient
    lifts = [cmat(K, [v])[0] for v in gp.lifts]
    low = [cmat(K, [v])[0] for v in W[w - 1].basis]
    A = from_columns(K, lifts + low, n)
    out = []
    for v in vectors:
        c = solve(K, A, v)
        if c is None:
            raise ValueError(f"vector does not lie in W_{w}")
        out.append(c[:gp.dim])
    return out


@at_field_precision
def weil_operator(H: MixedHodgeStructure, w: int, bigrading=None) -> list[list]:
    """``C = i^{p-q}`` on ``gr^W_w``, in the lift basis of that graded piece."""
    from .mhs import deligne_bigrading

    K = H.K
    big = bigrading or deligne_bigrading(H)
    vecs, phases = [], []
    for p, q, vs in big.blocks:
        if p + q != w:
            continue
        for v in vs:
            vecs.append(v)
            phases.append(K.i ** ((p - q) % 4) if (p - q) % 4 else K.one)
    if not vecs:
        return []
    B = transpose(_gr_coords(K, H.W, w, vecs))
    m = len(B)
    D = [[phases[i] if i == j else K.zero for j in range(m)] for i in range(m)]
    return matmul(K, matmul(K, B, D), inverse(K, B))


@at_field_precision
def hodge_metric(H: MixedHodgeStructure, pol: Matrix, w: int | None = None) -> HodgeMetric:
    """``(x, y) = Q(Cx, conj y)`` on ``gr^W_w`` for a pure piece; checks positivity."""
    K = H.K
    if w is None:
        if len(H.W.steps) != 1:
            raise ValueError("give the weight of the graded piece")
        w = H.W.steps[0][0]
    C = weil_operator(H, w)
    Q = cmat(K, pol.rows)
    # (x, y) = (Cx)^T Q conj(y) = y^* (Q^T C) x
    Hm = matmul(K, transpose(Q), C)
    M = [[K.to_mp(x) for x in r] for r in Hm]
    m = len(M)
    A = mpmath.matrix(M) if m else None
    if m:
        if mpmath.mnorm(A - A.H, 1) > mpmath.mpf(2) ** (-mpmath.mp.prec // 2):
            raise NotPositiveDefinite("the form is not hermitian")
        ev = mpmath.eighe(A, eigvals_only=True)
        evs = tuple(mpmath.mpf(e.real) if isinstance(e, mpmath.mpc) else e for e in ev)
        if min(evs) <= 0:
            raise NotPositiveDefinite(f"smallest eigenvalue {mpmath.nstr(min(evs), 5)}")
    else:
        evs = ()
    return HodgeMetric(M, evs)


def full_splitting(H: MixedHodgeStructure, ctx: HodgeContext) -> SplittingData:
    with mpmath.workprec(ctx.prec):
        sd = delta_splitting(H, mpmath.mpf(ctx.tol))
        zeta = evaluate_zeta(H.K, sd.tilde_bigrading, sd.delta, ctx.zeta_table)
        return complete_splitting(H, sd, zeta)


@at_field_precision
def p_metric(H: MixedHodgeStructure, pols: dict, w: int, d: int, A, big) -> mpmath.mpf:
    """``(A, A)_p`` on ``P = Hom(gr_w, gr_{w-d})`` with the tensor polarization."""
    K = H.K
    Cs = weil_operator(H, w, big)
    Ct = weil_operator(H, w - d, big)
    Qs = cmat(K, pols[w].rows)
    Qt = cmat(K, pols[w - d].rows)
    CA = matmul(K, matmul(K, Ct, A), inverse(K, Cs))
    Abar = [[x.conjugate() for x in r] for r in A]
    M = matmul(K, matmul(K, matmul(K, transpose(CA), Qt), Abar), inverse(K, Qs))
    tr = sum((M[i][i] for i in range(len(M))), K.zero)
    val = K.to_mp(tr)
    if abs(val.imag) > mpmath.mpf(2) ** (-mpmath.mp.prec // 2) * (1 + abs(val)):
        raise NotPositiveDefinite("Hodge metric value is not real")
    if val.real < -mpmath.mpf(2) ** (-mpmath.mp.prec // 2):
        raise NotPositiveDefinite("Hodge metric value is negative")
    return max(mpmath.mpf(val.real), mpmath.mpf(0))


def archimedean_height(H: MixedHodgeStructure, pols: dict, w: int, d: int,
                       ctx: HodgeContext | None = None, splitting: SplittingData | None = None):
    """``((2π)^d (δ_{w,d}, δ_{w,d})_p)^{1/d}``.

    ``pols`` maps each weight to the rational polarization form on its
    graded piece.  The factor ``(2π)^d`` converts the Betti normalisation of
    the Tate pieces, so that the Kummer extension of ``a`` has height
    ``|log a|``.
    """
    ctx = ctx or HodgeContext()
    if d < 2:
        raise ValueError("archimedean heights are defined for d >= 2")
    with mpmath.workprec(ctx.prec):
        sd = splitting or full_splitting(H, ctx)
        A = delta_component(H, sd, w, d)
        if not A or not A[0]:
            return mpmath.mpf(0)
        val = p_metric(H, pols, w, d, A, sd.bigrading)
        if val == 0:
            return mpmath.mpf(0)
        return mpmath.root((2 * mpmath.pi) ** d * val, d)


def archimedean_local_height(M, v, w: int, d: int, ctx: HodgeContext | None = None):
    """Local height at an archimedean place: factor 1 (real) or 2 (complex)."""
    place = M.arch_places[v] if not hasattr(v, "kind") else v
    factor = PLACE_FACTOR[place.kind]
    pols = {k: p.form for k, p in M.polarizations.items()}
    ctx = ctx or HodgeContext()
    with mpmath.workprec(ctx.prec):
        return factor * archimedean_height(place.H, pols, w, d, ctx)
