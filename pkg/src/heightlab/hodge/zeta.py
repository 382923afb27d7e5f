"""The correction ``ζ`` as a Lie polynomial in the Hodge components of ``δ``."""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .field import madd, matmul, mscale, msub, zeros
from .mhs import Bigrading, bidegree_components

__all__ = [
    "CoefficientTableMissing",
    "ZetaTable",
    "load_zeta_table",
    "default_zeta_table",
    "evaluate_zeta",
]

_LETTER = re.compile(r"\((-?\d+),\s*(-?\d+)\)")


class CoefficientTableMissing(LookupError):
    """The input needs a ``ζ`` component the table does not provide."""


@dataclass(frozen=True)
class ZetaTable:
    """Records ``(target, word, coefficient)``; coefficients are ``(re, im)`` pairs."""

    terms: tuple = ()
    zeros: frozenset = frozenset()
    version: str = "0"
    source: str = "<memory>"

    @classmethod
    def zero(cls) -> "ZetaTable":
        """The table with every coefficient set to zero (same coverage as none)."""
        return cls((), frozenset(), "zero", "<zero>")

    def zeroed(self) -> "ZetaTable":
        """Same coverage, all coefficients zero."""
        covered = frozenset(self.covered())
        return ZetaTable((), covered, f"{self.version}-zeroed", self.source)

    def full_terms(self):
        """Records together with their conjugates."""
        out = list(self.terms)
        for (p, q), word, (re_, im_) in self.terms:
            if p != q:
                out.append(((q, p), tuple((b, a) for a, b in word), (re_, -im_)))
        return out

    def covered(self) -> set[tuple[int, int]]:
        cov = set()
        for (p, q), _, _ in self.terms:
            cov |= {(p, q), (q, p)}
        for p, q in self.zeros:
            cov |= {(p, q), (q, p)}
        return cov


def _parse_fraction(s: str) -> Fraction:
    return Fraction(s.strip())


def load_zeta_table(path: str | Path) -> ZetaTable:
    text = Path(path).read_text()
    return parse_zeta_table(text, str(path))


def parse_zeta_table(text: str, source: str = "<string>") -> ZetaTable:
    terms, zero_set, version = [], set(), "0"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("version"):
            version = line.split(None, 1)[1].strip()
            continue
        parts = [p.strip() for p in line.split("|")]
        try:
            p, q = (int(x) for x in parts[0].split())
        except ValueError:
            raise ValueError(f"{source}:{lineno}: bad target {parts[0]!r}") from None
        if len(parts) == 2 and parts[1] == "zero":
            zero_set.add((p, q))
            continue
        if len(parts) != 3:
            raise ValueError(f"{source}:{lineno}: expected 'p q | word | re im'")
        word = tuple((int(a), int(b)) for a, b in _LETTER.findall(parts[1]))
        if not word:
            raise ValueError(f"{source}:{lineno}: empty word")
        if (sum(a for a, _ in word), sum(b for _, b in word)) != (p, q):
            raise ValueError(f"{source}:{lineno}: word does not have bidegree ({p},{q})")
        re_, im_ = (_parse_fraction(x) for x in parts[2].split())
        terms.append(((p, q), word, (re_, im_)))
    return ZetaTable(tuple(terms), frozenset(zero_set), version, source)


def default_zeta_table() -> ZetaTable:
    """The shipped table; a missing file gives the zero table and a warning."""
    try:
        ref = resources.files("heightlab").joinpath("data/zeta_table.txt")
        return parse_zeta_table(ref.read_text(), "heightlab/data/zeta_table.txt")
    except (FileNotFoundError, ModuleNotFoundError):
        warnings.warn("zeta coefficient table not found; using the zero table", RuntimeWarning)
        return ZetaTable.zero()


def _reachable(nonzero: set, possible: set) -> set:
    """Bidegrees of all brackets of the nonzero components that can act at all."""
    seen = set(nonzero)
    frontier = set(nonzero)
    while frontier:
        new = set()
        for a in frontier:
            for b in nonzero:
                c = (a[0] + b[0], a[1] + b[1])
                if c in possible and c not in seen:
                    new.add(c)
        seen |= new
        frontier = new
    return seen


def evaluate_zeta(K, big: Bigrading, delta, table: ZetaTable):
    """``ζ`` from ``δ`` and the bigrading of ``F̃``.  Raises when coverage is insufficient."""
    n = len(delta)
    comps = bidegree_components(K, big, delta)
    comps = {k: v for k, v in comps.items()}
    lab = big.labels()
    possible = {(a[0] - b[0], a[1] - b[1]) for a in lab for b in lab}
    nonzero = {k for k, v in comps.items()}
    needed = _reachable(nonzero, possible)
    covered = table.covered()
    missing = sorted(k for k in needed if k not in covered)
    if missing:
        raise CoefficientTableMissing(
            f"no zeta coefficients for bidegrees {missing} (table version {table.version})"
        )
    Z = zeros(K, n, n)
    for target, word, (re_, im_) in table.full_terms():
        if any(letter not in comps for letter in word):
            continue
        X = comps[word[-1]]
        for letter in reversed(word[:-1]):
            A = comps[letter]
            X = msub(matmul(K, A, X), matmul(K, X, A))
        c = K(re_) + K.i * K(im_)
        Z = madd(Z, mscale(c, X))
    return Z
