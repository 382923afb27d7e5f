"""Archimedean side: Hodge bigradings, the ``δ`` splitting and archimedean heights."""
from .field import CSpace, ExactField, GaussianRational, NumericField
from .metric import (
    PLACE_FACTOR,
    HodgeContext,
    HodgeMetric,
    NotPositiveDefinite,
    archimedean_height,
    archimedean_local_height,
    full_splitting,
    hodge_metric,
    weil_operator,
)
from .mhs import (
    Bigrading,
    HodgeFiltration,
    MHSAxiomViolation,
    MixedHodgeStructure,
    NonConvergence,
    RealSplitting,
    SplittingData,
    bidegree_components,
    complete_splitting,
    deligne_bigrading,
    delta_component,
    delta_splitting,
    is_r_split,
)
from .zeta import (
    CoefficientTableMissing,
    ZetaTable,
    default_zeta_table,
    evaluate_zeta,
    load_zeta_table,
    parse_zeta_table,
)

__all__ = [
    "PLACE_FACTOR",
    "HodgeContext",
    "HodgeMetric",
    "NotPositiveDefinite",
    "archimedean_height",
    "archimedean_local_height",
    "full_splitting",
    "hodge_metric",
    "weil_operator",
    "Bigrading",
    "HodgeFiltration",
    "MHSAxiomViolation",
    "MixedHodgeStructure",
    "NonConvergence",
    "RealSplitting",
    "SplittingData",
    "bidegree_components",
    "complete_splitting",
    "deligne_bigrading",
    "delta_component",
    "delta_splitting",
    "is_r_split",
    "CoefficientTableMissing",
    "ZetaTable",
    "default_zeta_table",
    "evaluate_zeta",
    "load_zeta_table",
    "parse_zeta_table",
    "CSpace",
    "ExactField",
    "GaussianRational",
    "NumericField",
    "zeta_and_canonical_splitting",
    "kummer_mhs",
]


def zeta_and_canonical_splitting(H, sd, ctx=None):
    """Attach ``ζ``, ``F̂`` and the real splitting of ``W`` to ``(δ, F̃)``."""
    import mpmath

    ctx = ctx or HodgeContext()
    with mpmath.workprec(ctx.prec):
        zeta = evaluate_zeta(H.K, sd.tilde_bigrading, sd.delta, ctx.zeta_table)
        return complete_splitting(H, sd, zeta)


def kummer_mhs(log_value, prec: int = 128) -> MixedHodgeStructure:
    """Rank-2 extension of ``Q(0)`` by ``Q(1)`` with extension datum ``log_value``.

    Basis ``e0`` (lifting ``gr_0``) and ``e1`` (the Betti generator
    ``2πi`` of ``Q(1)``); ``F^0`` is spanned by ``e0 + log_value/(2πi) e1``.
    """
    import mpmath

    from ..qlinalg import Filtration

    with mpmath.workprec(prec):
        c = mpmath.mpc(log_value) / (2j * mpmath.pi)
        K = NumericField(prec)
        W = Filtration.from_weights([0, -2])
        return MixedHodgeStructure.build(W, {0: [[1, c]]}, K=K, prec=prec)
