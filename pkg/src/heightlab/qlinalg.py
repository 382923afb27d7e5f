"""Exact linear algebra over the rationals.

Everything here works with :class:`fractions.Fraction` entries and never
rounds.  Subspaces are stored by their reduced row-echelon basis, so two
subspaces are equal exactly when their representations are equal.
Filtrations are increasing, integer indexed and stored sparsely by jump.

Row reduction is done fraction-free on integer rows (one gcd per row per
pivot) and only normalised to fractions at the end; this is several times
faster than eliminating with ``Fraction`` directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Iterable, Mapping, Sequence

Vector = tuple  # tuple[Fraction, ...]

__all__ = [
    "Matrix",
    "Subspace",
    "Filtration",
    "Subquotient",
    "DimensionMismatch",
    "ContainmentError",
    "as_fraction",
    "vector",
    "rref",
    "nullspace",
    "subspace_algebra",
    "induced_filtration",
    "graded_piece",
    "bigraded_piece",
    "splitting_basis",
    "hom_filtration",
]


class DimensionMismatch(ValueError):
    pass


class ContainmentError(ValueError):
    pass


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rational numbers")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        # only exactly representable values are accepted
        return Fraction(x)
    raise TypeError(f"cannot read {x!r} as an exact rational")


def vector(xs: Iterable) -> Vector:
    return tuple(as_fraction(x) for x in xs)


# --------------------------------------------------------------------------
# row reduction
# --------------------------------------------------------------------------

def _to_int_row(row: Sequence[Fraction]) -> list[int]:
    den = 1
    for x in row:
        d = x.denominator
        if d != 1:
            den = den * d // gcd(den, d)
    if den == 1:
        out = [x.numerator for x in row]
    else:
        out = [x.numerator * (den // x.denominator) for x in row]
    g = gcd(*out) if out else 0
    if g > 1:
        out = [x // g for x in out]
    return out


def _scaled_ints(row: Sequence[Fraction]) -> tuple[list[int], int]:
    """``row = ints / den`` with integer entries."""
    den = 1
    for x in row:
        d = x.denominator
        if d != 1:
            den = den * d // gcd(den, d)
    if den == 1:
        return [x.numerator for x in row], 1
    return [x.numerator * (den // x.denominator) for x in row], den


def rref(rows: Sequence[Sequence], ncols: int | None = None) -> tuple[tuple[Vector, ...], tuple[int, ...]]:
    """Reduced row-echelon form of the given rows.

    Returns the nonzero rows of the RREF and the pivot columns.
    """
    rows = [r for r in rows]
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    work = []
    for r in rows:
        if len(r) != ncols:
            raise DimensionMismatch(f"row of length {len(r)} in a {ncols}-column system")
        ir = _to_int_row([x if type(x) is Fraction else as_fraction(x) for x in r])
        if any(ir):
            work.append(ir)
    pivots: list[int] = []
    rank = 0
    nrows = len(work)
    for c in range(ncols):
        if rank == nrows:
            break
        piv = None
        best = None
        for i in range(rank, nrows):
            a = work[i][c]
            if a:
                # smallest magnitude pivot keeps integers small
                if best is None or abs(a) < best:
                    piv, best = i, abs(a)
                    if best == 1:
                        break
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        prow = work[rank]
        p = prow[c]
        for i in range(nrows):
            if i == rank:
                continue
            row = work[i]
            f = row[c]
            if not f:
                continue
            g = gcd(p, f)
            pp, ff = p // g, f // g
            new = [pp * x - ff * y for x, y in zip(row, prow)]
            h = gcd(*new)
            if h > 1:
                new = [x // h for x in new]
            work[i] = new
        pivots.append(c)
        rank += 1
    out = []
    zero = Fraction(0)
    for i, c in enumerate(pivots):
        row = work[i]
        p = row[c]
        if p < 0:
            row = [-x for x in row]
            p = -p
        out.append(tuple(Fraction(x, p) if x else zero for x in row))
    return tuple(out), tuple(pivots)


def nullspace(rows: Sequence[Sequence], ncols: int) -> tuple[Vector, ...]:
    """Basis of ``{x : A x = 0}`` where ``A`` has the given rows."""
    red, pivots = rref(rows, ncols)
    pivset = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivset:
            continue
        v = [Fraction(0)] * ncols
        v[free] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[free]
        basis.append(tuple(v))
    return tuple(basis)


# --------------------------------------------------------------------------
# matrices
# --------------------------------------------------------------------------

class Matrix:
    """Immutable dense matrix with exact rational entries.

    Acts on column vectors: ``M @ v`` for a tuple ``v``.
    """

    __slots__ = ("rows", "nrows", "ncols", "_ints", "_t", "__weakref__")

    def __init__(self, rows: Iterable[Iterable], ncols: int | None = None):
        rows = tuple(vector(r) for r in rows)
        if ncols is None:
            if not rows:
                raise ValueError("ncols required for a matrix with no rows")
            ncols = len(rows[0])
        for r in rows:
            if len(r) != ncols:
                raise DimensionMismatch("ragged matrix")
        self.rows = rows
        self.nrows = len(rows)
        self.ncols = ncols
        self._ints = None
        self._t = None

    @classmethod
    def _raw(cls, rows: tuple, ncols: int) -> "Matrix":
        m = cls.__new__(cls)
        m.rows = rows
        m.nrows = len(rows)
        m.ncols = ncols
        m._ints = None
        m._t = None
        return m

    def _int_rows(self) -> list[tuple[list[int], int]]:
        if self._ints is None:
            self._ints = [_scaled_ints(r) for r in self.rows]
        return self._ints

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "Matrix":
        z = Fraction(0)
        return cls._raw(tuple((z,) * ncols for _ in range(nrows)), ncols)

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls._raw(
            tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)), n
        )

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], nrows: int) -> "Matrix":
        cols = [vector(c) for c in cols]
        return cls._raw(tuple(tuple(c[i] for c in cols) for i in range(nrows)), len(cols))

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    @property
    def T(self) -> "Matrix":
        if self._t is None:
            self._t = Matrix._raw(
                tuple(tuple(r[j] for r in self.rows) for j in range(self.ncols)), self.nrows
            )
            self._t._t = self
        return self._t

    def column(self, j: int) -> Vector:
        return tuple(r[j] for r in self.rows)

    def columns(self) -> tuple[Vector, ...]:
        return tuple(self.column(j) for j in range(self.ncols))

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self.ncols == other.ncols and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.ncols, self.rows))

    def __repr__(self) -> str:
        body = ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self.rows)
        return f"Matrix([{body}])"

    def __add__(self, other: "Matrix") -> "Matrix":
        self._same_shape(other)
        return Matrix._raw(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)),
            self.ncols,
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._same_shape(other)
        return Matrix._raw(
            tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)),
            self.ncols,
        )

    def __neg__(self) -> "Matrix":
        return Matrix._raw(tuple(tuple(-a for a in r) for r in self.rows), self.ncols)

    def __mul__(self, c) -> "Matrix":
        c = as_fraction(c)
        return Matrix._raw(tuple(tuple(c * a for a in r) for r in self.rows), self.ncols)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.ncols != other.nrows:
                raise DimensionMismatch(f"{self.shape} @ {other.shape}")
            cols = other.T._int_rows()
            rows = self._int_rows()
            return Matrix._raw(
                tuple(tuple(_int_dot(r, c) for c in cols) for r in rows), other.ncols
            )
        v = tuple(other)
        if len(v) != self.ncols:
            raise DimensionMismatch(f"{self.shape} @ vector of length {len(v)}")
        vi = _scaled_ints(vector(v))
        return tuple(_int_dot(r, vi) for r in self._int_rows())

    def __pow__(self, k: int) -> "Matrix":
        if self.nrows != self.ncols:
            raise DimensionMismatch("power of a non-square matrix")
        out = Matrix.identity(self.nrows)
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def is_zero(self) -> bool:
        return all(not x for r in self.rows for x in r)

    def rank(self) -> int:
        return len(rref(self.rows, self.ncols)[1])

    def kernel(self) -> "Subspace":
        return Subspace.span(nullspace(self.rows, self.ncols), self.ncols)

    def image(self) -> "Subspace":
        return Subspace.span(self.columns(), self.nrows)

    def inverse(self) -> "Matrix":
        n = self.nrows
        if n != self.ncols:
            raise DimensionMismatch("inverse of a non-square matrix")
        aug = [r + tuple(Fraction(int(i == j)) for j in range(n)) for i, r in enumerate(self.rows)]
        red, piv = rref(aug, 2 * n)
        if len(piv) < n or piv[:n] != tuple(range(n)):
            raise ZeroDivisionError("singular matrix")
        return Matrix._raw(tuple(r[n:] for r in red[:n]), n)

    def solve(self, b: Sequence) -> Vector | None:
        """One solution of ``M x = b`` (free variables zero), or None."""
        b = vector(b)
        aug = [r + (bi,) for r, bi in zip(self.rows, b)]
        red, piv = rref(aug, self.ncols + 1)
        if piv and piv[-1] == self.ncols:
            return None
        x = [Fraction(0)] * self.ncols
        for row, p in zip(red, piv):
            x[p] = row[-1]
        return tuple(x)

    def to_lists(self) -> list[list[Fraction]]:
        return [list(r) for r in self.rows]

    def _same_shape(self, other: "Matrix") -> None:
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")


def _int_dot(a: tuple[list[int], int], b: tuple[list[int], int]) -> Fraction:
    s = 0
    for x, y in zip(a[0], b[0]):
        if x and y:
            s += x * y
    return Fraction(s, a[1] * b[1]) if s else Fraction(0)


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    s = Fraction(0)
    for x, y in zip(a, b):
        if x and y:
            s += x * y
    return s


# --------------------------------------------------------------------------
# subspaces
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Subspace:
    """A subspace of ``Q^ambient`` held in canonical reduced echelon form."""

    ambient: int
    basis: tuple[Vector, ...]
    pivots: tuple[int, ...] = field(compare=False, repr=False)

    @classmethod
    def span(cls, vectors: Iterable[Sequence], ambient: int) -> "Subspace":
        red, piv = rref(list(vectors), ambient)
        return cls(ambient, red, piv)

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(ambient, (), ())

    @classmethod
    def full(cls, ambient: int) -> "Subspace":
        return cls.span(Matrix.identity(ambient).rows, ambient)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return self.dim

    def __contains__(self, v: Sequence) -> bool:
        if len(v) != self.ambient:
            raise DimensionMismatch("vector length differs from ambient dimension")
        v, _ = _scaled_ints(vector(v))
        for (row, q), p in zip(self._int_basis, self.pivots):
            c = v[p]
            if c:
                v = [q * a - c * b for a, b in zip(v, row)]
        return not any(v)

    @cached_property
    def _int_basis(self) -> tuple[tuple[list[int], int], ...]:
        out = []
        for row, p in zip(self.basis, self.pivots):
            ints, _ = _scaled_ints(row)
            out.append((ints, ints[p]))
        return tuple(out)

    def coordinates(self, v: Sequence) -> Vector:
        """Coordinates of ``v`` (assumed to lie here) in the echelon basis."""
        return tuple(as_fraction(v[p]) for p in self.pivots)

    def contains(self, other: "Subspace") -> bool:
        self._check(other)
        return all(b in self for b in other.basis)

    def __le__(self, other: "Subspace") -> bool:
        return other.contains(self)

    def __ge__(self, other: "Subspace") -> bool:
        return self.contains(other)

    def __add__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if not other.basis:
            return self
        if not self.basis:
            return other
        return Subspace.span(self.basis + other.basis, self.ambient)

    @cached_property
    def annihilator(self) -> tuple[Vector, ...]:
        """Functionals (as row vectors) vanishing exactly on this subspace."""
        return nullspace(self.basis, self.ambient)

    def __and__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if self.contains(other):
            return other
        if other.contains(self):
            return self
        return Subspace.span(
            nullspace(self.annihilator + other.annihilator, self.ambient), self.ambient
        )

    def image(self, M: Matrix) -> "Subspace":
        if M.ncols != self.ambient:
            raise DimensionMismatch("map source differs from ambient dimension")
        if not self.basis:
            return Subspace.zero(M.nrows)
        return Subspace.span((M @ Matrix.from_columns(self.basis, self.ambient)).columns(), M.nrows)

    def preimage(self, M: Matrix) -> "Subspace":
        """``{v : M v in self}``."""
        if M.nrows != self.ambient:
            raise DimensionMismatch("map target differs from ambient dimension")
        ann = self.annihilator
        if not ann:
            return Subspace.full(M.ncols)
        rows = (Matrix._raw(ann, self.ambient) @ M).rows
        return Subspace.span(nullspace(rows, M.ncols), M.ncols)

    def is_zero(self) -> bool:
        return not self.basis

    def is_full(self) -> bool:
        return self.dim == self.ambient

    def _check(self, other: "Subspace") -> None:
        if self.ambient != other.ambient:
            raise DimensionMismatch(f"ambient {self.ambient} vs {other.ambient}")


def subspace_algebra(op: str, A: Subspace, B: Subspace):
    """Dispatch for ``sum``, ``intersect``, ``contains`` and ``quotient_basis``."""
    A._check(B)
    if op == "sum":
        return A + B
    if op == "intersect":
        return A & B
    if op == "contains":
        return A.contains(B)
    if op == "quotient_basis":
        return Subquotient(A, A & B).lifts
    raise ValueError(f"unknown subspace operation {op!r}")


# --------------------------------------------------------------------------
# subquotients
# --------------------------------------------------------------------------

class Subquotient:
    """``top / bottom`` with a deterministic lift basis.

    The lift basis is chosen by walking the echelon basis of ``top`` and
    keeping each row that is independent of ``bottom`` plus the rows kept so
    far.
    """

    def __init__(self, top: Subspace, bottom: Subspace):
        if not top.contains(bottom):
            raise ContainmentError("bottom of a subquotient must lie in its top")
        self.top = top
        self.bottom = bottom
        lifts = []
        current = bottom
        for row in top.basis:
            if row not in current:
                lifts.append(row)
                current = current + Subspace.span([row], top.ambient)
        self.lifts: tuple[Vector, ...] = tuple(lifts)

    @property
    def dim(self) -> int:
        return len(self.lifts)

    @property
    def ambient(self) -> int:
        return self.top.ambient

    @cached_property
    def _inverse(self) -> Matrix | None:
        if not self.top.basis:
            return None
        rows = [self.top.coordinates(v) for v in self.lifts + self.bottom.basis]
        return Matrix(rows, self.top.dim).inverse()

    def coordinates(self, v: Sequence) -> Vector:
        """Class of ``v`` in lift-basis coordinates; ``v`` must lie in top."""
        if v not in self.top:
            raise ContainmentError("vector does not lie in the top of the subquotient")
        if not self.lifts:
            return ()
        c = self.top.coordinates(v)
        inv = self._inverse
        x = tuple(_dot(c, inv.column(j)) for j in range(self.dim))
        return x

    def lift(self, coords: Sequence) -> Vector:
        coords = vector(coords)
        out = [Fraction(0)] * self.ambient
        for c, v in zip(coords, self.lifts):
            if c:
                for j, x in enumerate(v):
                    out[j] += c * x
        return tuple(out)

    def image_of(self, S: Subspace) -> Subspace:
        """Image of ``S ∩ top`` in the subquotient, in lift coordinates."""
        inter = S & self.top
        return Subspace.span([self.coordinates(b) for b in inter.basis], self.dim)

    def preimage_of(self, S: Subspace) -> Subspace:
        """Subspace of the ambient space mapping into ``S`` (lift coords)."""
        return Subspace.span([self.lift(b) for b in S.basis], self.ambient) + self.bottom

    def induced_map(self, M: Matrix, target: "Subquotient") -> Matrix:
        """Matrix of the map induced by ``M`` from this subquotient to ``target``."""
        for b in self.bottom.basis:
            if M @ b not in target.bottom:
                raise ContainmentError("map does not descend to the subquotients")
        cols = [target.coordinates(M @ v) for v in self.lifts]
        if not cols:
            return Matrix.zeros(target.dim, 0)
        return Matrix.from_columns(cols, target.dim)

    def __repr__(self) -> str:
        return f"Subquotient(dim={self.dim}, top={self.top.dim}, bottom={self.bottom.dim})"


# --------------------------------------------------------------------------
# filtrations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Filtration:
    """Finite increasing filtration of ``total`` inside ``Q^ambient``.

    ``steps`` lists ``(w, F_w)`` at the indices where the filtration jumps.
    Below the first index the step is zero; from the last index on it is
    ``total``.
    """

    ambient: int
    steps: tuple[tuple[int, Subspace], ...]
    total: Subspace

    @classmethod
    def from_steps(
        cls,
        ambient: int,
        steps: Mapping[int, Subspace] | Iterable[tuple[int, Subspace]],
        total: Subspace | None = None,
    ) -> "Filtration":
        items = sorted(dict(steps).items())
        kept: list[tuple[int, Subspace]] = []
        prev = Subspace.zero(ambient)
        for w, S in items:
            if S.ambient != ambient:
                raise DimensionMismatch("filtration step in the wrong ambient space")
            if not S.contains(prev):
                raise ContainmentError(f"filtration is not increasing at index {w}")
            if S != prev:
                kept.append((w, S))
                prev = S
        if total is None:
            total = prev if kept else Subspace.full(ambient)
        if prev != total:
            if kept or not total.is_zero():
                raise ContainmentError("filtration does not exhaust its total space")
        return cls(ambient, tuple(kept), total)

    @classmethod
    def trivial(cls, ambient: int, w: int, total: Subspace | None = None) -> "Filtration":
        total = Subspace.full(ambient) if total is None else total
        return cls.from_steps(ambient, {w: total}, total)

    @classmethod
    def from_weights(cls, weights: Sequence[int]) -> "Filtration":
        """Coordinate filtration: ``e_i`` has weight ``weights[i]``."""
        n = len(weights)
        steps = {}
        for w in sorted(set(weights)):
            steps[w] = Subspace.span(
                [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n) if weights[i] <= w],
                n,
            )
        return cls.from_steps(n, steps, Subspace.full(n))

    def __getitem__(self, w: int) -> Subspace:
        found = None
        for idx, S in self.steps:
            if idx <= w:
                found = S
            else:
                break
        return found if found is not None else Subspace.zero(self.ambient)

    @property
    def jumps(self) -> tuple[int, ...]:
        return tuple(w for w, _ in self.steps)

    @property
    def lowest(self) -> int | None:
        return self.steps[0][0] if self.steps else None

    @property
    def highest(self) -> int | None:
        return self.steps[-1][0] if self.steps else None

    def gr_dims(self) -> dict[int, int]:
        out, prev = {}, 0
        for w, S in self.steps:
            out[w] = S.dim - prev
            prev = S.dim
        return out

    def shifted(self, k: int) -> "Filtration":
        return Filtration(self.ambient, tuple((w + k, S) for w, S in self.steps), self.total)

    def is_valid(self) -> bool:
        prev = Subspace.zero(self.ambient)
        for _, S in self.steps:
            if not S.contains(prev) or S == prev:
                return False
            prev = S
        return (prev == self.total) or (not self.steps and self.total.is_zero())


def induced_filtration(F: Filtration, S: Subspace, mode: str) -> Filtration:
    """Filtration induced on ``S`` (``restrict``) or on ``total / S`` (``quotient``).

    The quotient filtration lives in the lift coordinates of
    ``Subquotient(F.total, S)``.
    """
    if S.ambient != F.ambient:
        raise DimensionMismatch("subspace and filtration live in different spaces")
    if not F.total.contains(S):
        raise ContainmentError("subspace is not contained in the filtered space")
    if mode == "restrict":
        return Filtration.from_steps(F.ambient, {w: Fw & S for w, Fw in F.steps}, S)
    if mode == "quotient":
        sq = Subquotient(F.total, S)
        return Filtration.from_steps(
            sq.dim, {w: sq.image_of(Fw) for w, Fw in F.steps}, Subspace.full(sq.dim)
        )
    raise ValueError(f"unknown mode {mode!r}")


def graded_piece(F: Filtration, w: int) -> Subquotient:
    return Subquotient(F[w], F[w - 1])


def bigraded_piece(W: Filtration, Wp: Filtration, w: int, k: int) -> Subquotient:
    """``gr^{Wp}_k gr^W_w`` as a subquotient of the ambient space."""
    low = W[w - 1]
    Ww = W[w]
    return Subquotient((Ww & Wp[k]) + low, (Ww & Wp[k - 1]) + low)


def splitting_basis(F: Filtration) -> list[tuple[int, Vector]]:
    """Basis of ``F.total`` adapted to ``F``: lifts of each graded piece in order."""
    out = []
    for w, _ in F.steps:
        for v in graded_piece(F, w).lifts:
            out.append((w, v))
    return out


def hom_filtration(src: Filtration, tgt: Filtration) -> Filtration:
    """Filtration on ``Hom(src, tgt)`` induced by two filtrations on full spaces.

    Maps are vectorised row-major as ``tgt.ambient x src.ambient`` matrices;
    ``f`` has index ``<= k`` when ``f(src_j)`` lies in ``tgt_{j+k}`` for all
    ``j``.
    """
    if not (src.total.is_full() and tgt.total.is_full()):
        raise ValueError("hom_filtration needs filtrations of the whole space")
    m, n = tgt.ambient, src.ambient
    sb = splitting_basis(src)
    tb = splitting_basis(tgt)
    if not sb or not tb:
        return Filtration.from_steps(m * n, {}, Subspace.full(m * n))
    S = Matrix.from_columns([v for _, v in sb], n)
    Sinv = S.inverse()
    gens: dict[int, list[Vector]] = {}
    for i, (wt, tv) in enumerate(tb):
        for j, (ws, _) in enumerate(sb):
            row = Sinv.rows[j]
            flat = tuple(a * b for a in tv for b in row)
            gens.setdefault(wt - ws, []).append(flat)
    steps = {}
    acc: list[Vector] = []
    for k in sorted(gens):
        acc.extend(gens[k])
        steps[k] = Subspace.span(acc, m * n)
    return Filtration.from_steps(m * n, steps, Subspace.full(m * n))
