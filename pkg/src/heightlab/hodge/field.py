"""Linear algebra over an exact or a numerical complex field.

Two scalar fields share one set of routines:

* :class:`ExactField` uses :class:`GaussianRational`, so data with
  coordinates in ``Q(i)`` is handled without rounding;
* :class:`NumericField` uses ``mpmath.mpc`` at a fixed precision, and a
  scalar counts as zero below a threshold.

Matrices are lists of rows.  Subspaces are stored by a reduced echelon
basis of row vectors.
"""
from __future__ import annotations

import contextlib
import functools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import mpmath


class GaussianRational:
    """Exact element ``re + i*im`` of ``Q(i)``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    @classmethod
    def of(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction, Rational)):
            return cls(Fraction(x), Fraction(0))
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, float):
            return cls(Fraction(x), Fraction(0))
        raise TypeError(f"cannot read {x!r} as a Gaussian rational")

    def __add__(self, o):
        o = GaussianRational.of(o)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = GaussianRational.of(o)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return GaussianRational.of(o) - self

    def __mul__(self, o):
        o = GaussianRational.of(o)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = GaussianRational.of(o)
        n = o.re * o.re + o.im * o.im
        if not n:
            raise ZeroDivisionError("division by zero in Q(i)")
        return GaussianRational((self.re * o.re + self.im * o.im) / n,
                                (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, o):
        return GaussianRational.of(o) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        base, out = (self, GaussianRational(1)) if k >= 0 else (1 / self, GaussianRational(1))
        for _ in range(abs(k)):
            out = out * base
        return out

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __eq__(self, o):
        try:
            o = GaussianRational.of(o)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def __abs__(self):
        return mpmath.sqrt(mpmath.mpf(self.re * self.re + self.im * self.im))

    def __repr__(self):
        if not self.im:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


def _mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass(frozen=True)
class ExactField:
    name: str = "exact"

    def __call__(self, x):
        return GaussianRational.of(x)

    @property
    def zero(self):
        return GaussianRational()

    @property
    def one(self):
        return GaussianRational(1)

    @property
    def i(self):
        return GaussianRational(0, 1)

    def is_zero(self, x) -> bool:
        return not x

    def magnitude(self, x):
        # exact pivoting: any nonzero entry works, prefer small height
        return -(abs(x.re.numerator) + abs(x.im.numerator) + x.re.denominator + x.im.denominator)

    def to_mp(self, x) -> mpmath.mpc:
        return mpmath.mpc(_mpf(x.re), _mpf(x.im))

    def real_part(self, x):
        return x.re

    exact = True


@dataclass(frozen=True)
class NumericField:
    prec: int = 128
    zero_tol: float | None = None
    name: str = "numeric"

    def __post_init__(self):
        t = self.zero_tol if self.zero_tol is not None else mpmath.mpf(2) ** (-(self.prec * 3 // 4))
        object.__setattr__(self, "_tol", mpmath.mpf(t))

    @property
    def tol(self) -> mpmath.mpf:
        return self._tol

    def __call__(self, x):
        if isinstance(x, GaussianRational):
            return mpmath.mpc(_mpf(x.re), _mpf(x.im))
        if isinstance(x, Fraction):
            return mpmath.mpc(_mpf(x))
        return mpmath.mpc(x)

    @property
    def zero(self):
        return mpmath.mpc(0)

    @property
    def one(self):
        return mpmath.mpc(1)

    @property
    def i(self):
        return mpmath.mpc(0, 1)

    def is_zero(self, x) -> bool:
        return abs(x) <= self._tol

    def magnitude(self, x):
        return abs(x)

    def to_mp(self, x) -> mpmath.mpc:
        return mpmath.mpc(x)

    def real_part(self, x):
        return mpmath.mpf(x.real)

    exact = False


Field = ExactField | NumericField


def field_precision(K):
    """Context manager running at the working precision of ``K``."""
    if getattr(K, "exact", True):
        return contextlib.nullcontext()
    return mpmath.workprec(K.prec)


def at_field_precision(fn):
    """Run ``fn`` at the precision of the field of its first argument."""
    @functools.wraps(fn)
    def wrapper(H, *args, **kwargs):
        with field_precision(H.K):
            return fn(H, *args, **kwargs)
    return wrapper


def detect_field(values, prec: int = 128):
    """The exact field when every value is a Gaussian rational, else numeric."""
    for x in values:
        if isinstance(x, (GaussianRational, int, Fraction)):
            continue
        return NumericField(prec)
    return ExactField()


# --------------------------------------------------------------------------
# matrices as lists of rows
# --------------------------------------------------------------------------

def cmat(K, rows: Sequence[Sequence]) -> list[list]:
    return [[K(x) for x in r] for r in rows]


def identity(K, n: int) -> list[list]:
    return [[K.one if i == j else K.zero for j in range(n)] for i in range(n)]


def zeros(K, m: int, n: int) -> list[list]:
    return [[K.zero for _ in range(n)] for _ in range(m)]


def matmul(K, A: list[list], B: list[list]) -> list[list]:
    if not A:
        return []
    n = len(B[0]) if B else 0
    Bt = list(zip(*B)) if B else [() for _ in range(n)]
    out = []
    for r in A:
        row = []
        for c in Bt:
            s = K.zero
            for x, y in zip(r, c):
                if x and y:
                    s = s + x * y
            row.append(s)
        out.append(row)
    return out


def matvec(K, A: list[list], v: Sequence) -> list:
    out = []
    for r in A:
        s = K.zero
        for x, y in zip(r, v):
            if x and y:
                s = s + x * y
        out.append(s)
    return out


def madd(A, B):
    return [[x + y for x, y in zip(r, s)] for r, s in zip(A, B)]


def msub(A, B):
    return [[x - y for x, y in zip(r, s)] for r, s in zip(A, B)]


def mscale(c, A):
    return [[c * x for x in r] for r in A]


def transpose(A):
    return [list(c) for c in zip(*A)]


def conj(A):
    return [[x.conjugate() for x in r] for r in A]


def adjoint(A):
    return transpose(conj(A))


def columns(A) -> list[list]:
    return transpose(A) if A else []


def from_columns(K, cols: Sequence[Sequence], n: int) -> list[list]:
    if not cols:
        return [[] for _ in range(n)]
    return [[c[i] for c in cols] for i in range(n)]


def is_zero_matrix(K, A) -> bool:
    return all(K.is_zero(x) for r in A for x in r)


def max_abs(K, A) -> mpmath.mpf:
    m = mpmath.mpf(0)
    for r in A:
        for x in r:
            a = abs(K.to_mp(x))
            if a > m:
                m = a
    return m


def frobenius(K, A) -> mpmath.mpf:
    s = mpmath.mpf(0)
    for r in A:
        for x in r:
            s += abs(K.to_mp(x)) ** 2
    return mpmath.sqrt(s)


def rref(K, rows: Sequence[Sequence], ncols: int) -> tuple[list[list], list[int]]:
    work = [list(r) for r in rows]
    pivots: list[int] = []
    rank = 0
    for c in range(ncols):
        if rank == len(work):
            break
        best, piv = None, None
        for i in range(rank, len(work)):
            x = work[i][c]
            if not K.is_zero(x):
                m = K.magnitude(x)
                if best is None or m > best:
                    best, piv = m, i
        if piv is None:
            for i in range(rank, len(work)):
                work[i][c] = K.zero
            continue
        work[rank], work[piv] = work[piv], work[rank]
        p = work[rank][c]
        prow = [x / p for x in work[rank]]
        prow[c] = K.one
        work[rank] = prow
        for i in range(len(work)):
            if i != rank:
                f = work[i][c]
                if f:
                    work[i] = [x - f * y for x, y in zip(work[i], prow)]
                    work[i][c] = K.zero
        pivots.append(c)
        rank += 1
    out = work[:rank]
    if not K.exact:
        out = [[K.zero if K.is_zero(x) else x for x in r] for r in out]
    return out, pivots


def nullspace(K, rows: Sequence[Sequence], ncols: int) -> list[list]:
    red, piv = rref(K, rows, ncols)
    pset = set(piv)
    basis = []
    for free in range(ncols):
        if free in pset:
            continue
        v = [K.zero] * ncols
        v[free] = K.one
        for r, p in zip(red, piv):
            v[p] = -r[free]
        basis.append(v)
    return basis


def inverse(K, A: list[list]) -> list[list]:
    n = len(A)
    aug = [list(r) + [K.one if i == j else K.zero for j in range(n)] for i, r in enumerate(A)]
    red, piv = rref(K, aug, 2 * n)
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [r[n:] for r in red[:n]]


def solve(K, A: list[list], b: Sequence) -> list | None:
    ncols = len(A[0]) if A else 0
    aug = [list(r) + [bi] for r, bi in zip(A, b)]
    red, piv = rref(K, aug, ncols + 1)
    if piv and piv[-1] == ncols:
        return None
    x = [K.zero] * ncols
    for r, p in zip(red, piv):
        x[p] = r[-1]
    return x


def nilpotent_exp(K, X: list[list]) -> list[list]:
    """``exp(X)`` for nilpotent ``X`` as a finite sum."""
    n = len(X)
    out = identity(K, n)
    term = identity(K, n)
    for k in range(1, n + 1):
        term = mscale(K(Fraction(1, k)), matmul(K, term, X))
        if is_zero_matrix(K, term):
            break
        out = madd(out, term)
    return out


def unipotent_log(K, g: list[list]) -> list[list]:
    """``log(g)`` for unipotent ``g`` as a finite sum."""
    n = len(g)
    X = msub(g, identity(K, n))
    out = zeros(K, n, n)
    term = identity(K, n)
    for k in range(1, n + 1):
        term = matmul(K, term, X)
        if is_zero_matrix(K, term):
            break
        coeff = K(Fraction((-1) ** (k + 1), k))
        out = madd(out, mscale(coeff, term))
    return out


# --------------------------------------------------------------------------
# subspaces of K^n
# --------------------------------------------------------------------------

class CSpace:
    """Subspace of ``K^n`` held by a reduced echelon basis."""

    __slots__ = ("K", "n", "basis", "pivots", "_ann")

    def __init__(self, K, n: int, vectors: Sequence[Sequence] = ()):
        self.K = K
        self.n = n
        red, piv = rref(K, vectors, n) if vectors else ([], [])
        self.basis = red
        self.pivots = piv
        self._ann = None

    @classmethod
    def full(cls, K, n: int) -> "CSpace":
        sp = cls(K, n)
        sp.basis = identity(K, n)
        sp.pivots = list(range(n))
        return sp

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def annihilator(self) -> list[list]:
        if self._ann is None:
            self._ann = nullspace(self.K, self.basis, self.n) if self.basis else identity(self.K, self.n)
        return self._ann

    def __add__(self, other: "CSpace") -> "CSpace":
        return CSpace(self.K, self.n, self.basis + other.basis)

    def __and__(self, other: "CSpace") -> "CSpace":
        if self.dim == self.n:
            return other
        if other.dim == self.n:
            return self
        return CSpace(self.K, self.n, nullspace(self.K, self.annihilator + other.annihilator, self.n))

    def contains_vector(self, v: Sequence) -> bool:
        K = self.K
        return all(K.is_zero(x) for x in matvec(K, self.annihilator, v)) if self.dim < self.n else True

    def contains(self, other: "CSpace") -> bool:
        return all(self.contains_vector(v) for v in other.basis)

    def conjugate(self) -> "CSpace":
        return CSpace(self.K, self.n, conj(self.basis))

    def image(self, M: list[list]) -> "CSpace":
        return CSpace(self.K, len(M), [matvec(self.K, M, v) for v in self.basis])

    def projector(self) -> list[list]:
        """Orthogonal projector onto this subspace."""
        K = self.K
        if not self.basis:
            return zeros(K, self.n, self.n)
        X = transpose(self.basis)
        G = matmul(K, adjoint(X), X)
        return matmul(K, matmul(K, X, inverse(K, G)), adjoint(X))

    def distance(self, other: "CSpace") -> mpmath.mpf:
        """Frobenius norm of the difference of orthogonal projectors."""
        return frobenius(self.K, msub(self.projector(), other.projector()))

    def __repr__(self) -> str:
        return f"CSpace(dim={self.dim}, n={self.n})"
