"""Reading description documents.

Documents are YAML mappings.  Rational entries are integers or ``"num/den"``
strings.  Complex entries are strings such as ``"1/3+1/2i"``, ``"-i"`` or
``"0.25-1.5e-3i"``; a complex entry with only rational parts stays exact,
one with a decimal part becomes a floating value at the document precision.

A motive document::

    weights: [0, -1, -1]            # coordinate weights, or
    W: {0: [[1, 0, 0], ...], ...}   # steps with generators
    polarizations: {0: [[1]], -1: [[0, 1], [-1, 0]]}
    finite_places:
      - {label: "5", norm: 5, N: [[0, 0, 0], [0, 0, 0], [0, 1, 0]]}
    arch_places:
      - {label: inf, kind: real, F: {0: [[1, "1/3+1/2i", "2/5"], [0, 1, "i"]]}}
    precision: 128

Degeneration documents for ``rmf``, ``split`` and ``geo-height`` use the same
``weights``/``W`` keys plus ``N`` (one map) or ``points`` (a list of
``{label, N}``).  Hodge documents for ``arch-height`` use ``F`` and
``polarizations``.
"""
from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

import mpmath
import yaml

from .geoheight import DegenerationPoint, GeometricVariation, MissingRMF, Polarization
from .hodge.field import GaussianRational
from .hodge.mhs import MixedHodgeStructure
from .monodromy import NilpotentMap, NonExistence, relative_monodromy_filtration
from .motives import ArchPlaceData, FinitePlaceData, MotiveData
from .qlinalg import Filtration, Matrix, Subspace

__all__ = [
    "ParseError",
    "MissingRMF",
    "parse_rational",
    "parse_complex",
    "load_document",
    "read_filtration",
    "read_matrix",
    "read_motive",
    "read_variation",
    "read_hodge",
]


class ParseError(ValueError):
    """The document does not follow the schema."""


_RAT = r"[+-]?\d+(?:/\d+)?"
_DEC = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


def parse_rational(x) -> Fraction:
    if isinstance(x, bool):
        raise ParseError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str) and re.fullmatch(_RAT, x.strip()):
        return Fraction(x.strip())
    raise ParseError(f"not an exact rational: {x!r} (write integers or 'num/den')")


def _is_exact(s: str) -> bool:
    return re.fullmatch(_RAT, s) is not None


def parse_complex(x, prec: int = 128):
    """A Gaussian rational when exact, else an ``mpc`` at ``prec`` bits."""
    if isinstance(x, bool):
        raise ParseError(f"not a number: {x!r}")
    if isinstance(x, int):
        return GaussianRational(x)
    if isinstance(x, float):
        raise ParseError(f"write decimal {x!r} as a string to keep its digits")
    if not isinstance(x, str):
        raise ParseError(f"not a number: {x!r}")
    s = x.replace(" ", "")
    if not s:
        raise ParseError("empty number")
    if s.endswith("i"):
        body = s[:-1]
        # split at the last sign that is not an exponent sign or the leading sign
        cut = None
        for k in range(len(body) - 1, 0, -1):
            if body[k] in "+-" and body[k - 1] not in "eE":
                cut = k
                break
        re_s, im_s = (body[:cut], body[cut:]) if cut is not None else ("0", body)
        if im_s in ("", "+"):
            im_s = "1"
        elif im_s == "-":
            im_s = "-1"
    else:
        re_s, im_s = s, "0"
    parts = []
    for part in (re_s, im_s):
        if _is_exact(part):
            parts.append(Fraction(part))
        elif re.fullmatch(_DEC, part):
            parts.append(part)
        else:
            raise ParseError(f"not a complex number: {x!r}")
    if all(isinstance(p, Fraction) for p in parts):
        return GaussianRational(*parts)
    with mpmath.workprec(prec):
        return mpmath.mpc(*(mpmath.mpf(p) if isinstance(p, str) else
                            mpmath.mpf(p.numerator) / p.denominator for p in parts))


def load_document(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("a document must be a mapping")
    return doc


def read_matrix(rows, name: str = "matrix") -> Matrix:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ParseError(f"{name} must be a list of rows")
    if not rows:
        return Matrix.zeros(0, 0)
    if len({len(r) for r in rows}) != 1:
        raise ParseError(f"{name} has rows of different lengths")
    return Matrix([[parse_rational(x) for x in r] for r in rows])


def _int_keys(d, name: str) -> dict:
    if not isinstance(d, dict):
        raise ParseError(f"{name} must be a mapping")
    try:
        return {int(k): v for k, v in d.items()}
    except (TypeError, ValueError):
        raise ParseError(f"{name} keys must be integers") from None


def read_filtration(doc: dict) -> Filtration:
    if "weights" in doc:
        ws = doc["weights"]
        if not isinstance(ws, list) or not all(isinstance(w, int) for w in ws):
            raise ParseError("weights must be a list of integers")
        return Filtration.from_weights(ws)
    if "W" in doc:
        steps = _int_keys(doc["W"], "W")
        n = doc.get("dim")
        if not isinstance(n, int):
            raise ParseError("a W given by generators needs 'dim'")
        try:
            return Filtration.from_steps(
                n, {w: Subspace.span([[parse_rational(x) for x in g] for g in gens], n)
                    for w, gens in steps.items()}, Subspace.full(n))
        except ValueError as exc:
            raise ParseError(f"bad W: {exc}") from None
    raise ParseError("give 'weights' or 'W'")


def _polarizations(doc: dict) -> dict:
    out = {}
    for w, rows in _int_keys(doc.get("polarizations", {}), "polarizations").items():
        try:
            out[w] = Polarization.of(w, read_matrix(rows, f"polarization {w}"))
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc)) from None
    return out


def read_hodge(doc: dict, W: Filtration, prec: int) -> MixedHodgeStructure:
    F = {p: [[parse_complex(x, prec) for x in g] for g in gens]
         for p, gens in _int_keys(doc.get("F", {}), "F").items()}
    if not F:
        raise ParseError("an archimedean place needs 'F'")
    for p, gens in F.items():
        if any(len(g) != W.ambient for g in gens):
            raise ParseError(f"F^{p} generators have the wrong length")
    return MixedHodgeStructure.build(W, F, prec=prec)


def read_motive(doc: dict, prec: int | None = None) -> MotiveData:
    prec = int(prec or doc.get("precision", 128))
    W = read_filtration(doc)
    pols = _polarizations(doc)
    finite = []
    for k, v in enumerate(doc.get("finite_places", []) or []):
        try:
            finite.append(FinitePlaceData(str(v.get("label", k)), int(v["norm"]),
                                          NilpotentMap.of(read_matrix(v["N"], "N"))))
        except KeyError as exc:
            raise ParseError(f"finite place {k} lacks {exc}") from None
    arch = []
    for k, v in enumerate(doc.get("arch_places", []) or []):
        arch.append(ArchPlaceData(str(v.get("label", "inf")), v.get("kind", "real"), read_hodge(v, W, prec)))
    try:
        return MotiveData(W.ambient, W, pols, finite, arch, str(doc.get("label", "")))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def read_variation(doc: dict):
    """A :class:`GeometricVariation`; raises :class:`MissingRMF` at a bad point."""
    W = read_filtration(doc)
    pols = _polarizations(doc)
    pts = []
    for k, p in enumerate(doc.get("points", []) or []):
        N = NilpotentMap.of(read_matrix(p["N"], "N"))
        Wp = relative_monodromy_filtration(N, W)
        if isinstance(Wp, NonExistence):
            raise MissingRMF(f"point {p.get('label', k)}: {Wp.reason}")
        pts.append(DegenerationPoint(str(p.get("label", k)), N, W))
    return GeometricVariation(W.ambient, W, pols, pts)
