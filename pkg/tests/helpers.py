"""Random fixtures shared by the test modules."""
from __future__ import annotations

import random
from fractions import Fraction

from heightlab.qlinalg import Filtration, Matrix


def rand_frac(rng: random.Random, spread: int = 4) -> Fraction:
    return Fraction(rng.randint(-spread, spread), rng.randint(1, 3))


def random_w_unipotent(rng: random.Random, weights: list[int], density: float = 0.6) -> Matrix:
    """Random invertible map preserving the coordinate filtration of ``weights``."""
    n = len(weights)
    rows = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and weights[i] <= weights[j] and rng.random() < density:
                rows[i][j] = rand_frac(rng)
    g = Matrix(rows)
    if g.rank() < n:
        return Matrix.identity(n)
    return g


def split_rmf_fixture(rng: random.Random, max_dim: int = 6, density: float = 0.7):
    """``(N, W)`` for which the relative monodromy filtration exists.

    Built from Jordan blocks on each weight, plus cross terms that lower the
    weight and shift the block index by exactly two, then conjugated by a
    random ``W``-preserving map.  Returns ``(N, W, blocks)``.
    """
    n_target = rng.randint(1, max_dim)
    weights: list[int] = []
    kidx: list[int] = []
    N0_edges: list[tuple[int, int]] = []
    while len(weights) < n_target:
        w = rng.randint(-3, 1)
        size = rng.randint(1, min(3, n_target - len(weights)))
        start = len(weights)
        for t in range(size):
            weights.append(w)
            kidx.append(w + size - 1 - 2 * t)
            if t:
                N0_edges.append((start + t, start + t - 1))  # e_{t-1} -> e_t
    n = len(weights)
    order = sorted(range(n), key=lambda i: (weights[i], i))
    pos = {old: new for new, old in enumerate(order)}
    weights = [weights[i] for i in order]
    kidx = [kidx[i] for i in order]
    rows = [[Fraction(0)] * n for _ in range(n)]
    for (i, j) in N0_edges:
        rows[pos[i]][pos[j]] = Fraction(1)
    for i in range(n):
        for j in range(n):
            if weights[i] < weights[j] and kidx[i] == kidx[j] - 2 and rng.random() < density:
                rows[i][j] = rand_frac(rng)
    N = Matrix(rows)
    g = random_w_unipotent(rng, weights)
    N = g @ N @ g.inverse()
    return N, Filtration.from_weights(weights), weights


def random_rmf_fixture(rng: random.Random, max_dim: int = 6):
    """``(N, W)`` with ``N`` an arbitrary nilpotent map preserving ``W``."""
    n = rng.randint(1, max_dim)
    weights = sorted(rng.randint(-3, 1) for _ in range(n))
    # strictly upper triangular in an order refining the weights
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if j > i and rng.random() < 0.5:
                rows[i][j] = rand_frac(rng)
    N = Matrix(rows)
    g = random_w_unipotent(rng, weights)
    return g @ N @ g.inverse(), Filtration.from_weights(weights)


def string_form(size: int) -> list[list[Fraction]]:
    """Polarization of one Hodge-Tate ``sl2``-string ``e_0 -> e_1 -> ... -> e_{size-1}``."""
    return [
        [Fraction((-1) ** i) if i + j == size - 1 else Fraction(0) for j in range(size)]
        for i in range(size)
    ]


def polarized_fixture(rng: random.Random, max_dim: int = 6, density: float = 0.8,
                      conjugate: bool = True):
    """Genuine polarized Hodge-Tate degeneration data.

    Each weight carries Jordan strings whose length has the parity of the
    weight plus one; the string form is ``Q(e_i, e_j) = (-1)^i`` on the
    antidiagonal.  Cross terms lower the weight and shift the string index
    by two.  Returns ``(N, weights, forms)`` with ``forms[w]`` in the
    coordinate basis of ``gr_w``.
    """
    n_target = rng.randint(2, max_dim)
    strings: list[tuple[int, int]] = []
    total = 0
    while total < n_target:
        w = rng.randint(-4, 1)
        room = n_target - total
        sizes = [s for s in (1, 2, 3) if s <= room and (s - 1 - w) % 2 == 0]
        if not sizes:
            continue
        s = rng.choice(sizes)
        strings.append((w, s))
        total += s
    strings.sort(key=lambda t: t[0])
    weights, kidx, rows_edges = [], [], []
    forms: dict[int, list[list[Fraction]]] = {}
    for w, s in strings:
        start = len(weights)
        for t in range(s):
            weights.append(w)
            kidx.append(w + s - 1 - 2 * t)
            if t:
                rows_edges.append((start + t, start + t - 1))
        block = string_form(s)
        old = forms.get(w, [])
        m = len(old)
        new = [[Fraction(0)] * (m + s) for _ in range(m + s)]
        for i in range(m):
            for j in range(m):
                new[i][j] = old[i][j]
        for i in range(s):
            for j in range(s):
                new[m + i][m + j] = block[i][j]
        forms[w] = new
    n = len(weights)
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i, j in rows_edges:
        rows[i][j] = Fraction(1)
    for i in range(n):
        for j in range(n):
            if weights[i] < weights[j] and kidx[i] == kidx[j] - 2 and rng.random() < density:
                rows[i][j] = rand_frac(rng)
    N = Matrix(rows)
    if conjugate:
        g = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(n):
                if weights[i] < weights[j] and rng.random() < 0.5:
                    g[i][j] = rand_frac(rng)
        g = Matrix(g)
        N = g @ N @ g.inverse()
    return N, weights, forms


def random_mhs_data(rng: random.Random, max_dim: int = 5, twist: bool = True,
                    max_weight_span: int = 3):
    """Random mixed Hodge structure data over ``Q(i)``.

    Start from a real-split bigrading built from Tate lines and conjugate
    pairs, move it by a random real ``W``-preserving map, then apply
    ``exp(X)`` for a random complex ``X`` lowering both Hodge indices.
    Returns ``(weights, F_generators, labels, forms)`` where ``F_generators``
    maps ``p`` to rows spanning ``F^p`` and ``forms[w]`` polarizes ``gr_w``
    in its coordinate basis.
    """
    from heightlab.hodge.field import GaussianRational as G

    n_target = rng.randint(1, max_dim)
    top = rng.randint(-1, 1)
    vecs: list[tuple[int, int, list]] = []    # (p, q, complex vector in weight coordinates)
    weights: list[int] = []
    while len(weights) < n_target:
        w = rng.randint(top - max_weight_span, top)
        room = n_target - len(weights)
        if w % 2 == 0 and (room == 1 or rng.random() < 0.5):
            weights.append(w)
            vecs.append((w // 2, w // 2, [len(weights) - 1, None]))
        elif room >= 2:
            p = rng.randint(w // 2 + 1, w // 2 + 2)
            q = w - p
            if p == q:
                continue
            weights.extend([w, w])
            a, b = len(weights) - 2, len(weights) - 1
            vecs.append((p, q, [a, b, 1]))
            vecs.append((q, p, [a, b, -1]))
    order = sorted(range(len(weights)), key=lambda i: (weights[i], i))
    pos = {old: new for new, old in enumerate(order)}
    weights = [weights[i] for i in order]
    n = len(weights)
    local = {}
    for i, w in enumerate(weights):
        local[i] = sum(1 for j in range(i) if weights[j] == w)
    forms = {w: [[Fraction(0)] * weights.count(w) for _ in range(weights.count(w))]
             for w in set(weights)}
    for p, q, spec in vecs:
        w = p + q
        Q = forms[w]
        if spec[1] is None:
            i = local[pos[spec[0]]]
            Q[i][i] = Fraction(1)
        elif spec[2] == 1:
            a, b = local[pos[spec[0]]], local[pos[spec[1]]]
            if w % 2 == 0:
                sgn = Fraction((-1) ** ((p - q) // 2))
                Q[a][a] = Q[b][b] = sgn
            else:
                c = Fraction((-1) ** ((p - q - 1) // 2))
                Q[a][b], Q[b][a] = c, -c
    basis = []
    labels = []
    for p, q, spec in vecs:
        v = [G(0)] * n
        if spec[1] is None:
            v[pos[spec[0]]] = G(1)
        else:
            v[pos[spec[0]]] = G(1)
            v[pos[spec[1]]] = G(0, spec[2])
        basis.append(v)
        labels.append((p, q))
    # real W-preserving change of basis
    g = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if weights[i] < weights[j] and rng.random() < 0.6:
                g[i][j] = rand_frac(rng, 3)
    basis = [[sum((g[i][k] * v[k] for k in range(n)), G(0)) for i in range(n)] for v in basis]
    if twist:
        # X maps label j into labels i with p_i < p_j and q_i < q_j
        new_basis = [list(v) for v in basis]
        for j, (pj, qj) in enumerate(labels):
            for i, (pi, qi) in enumerate(labels):
                if pi < pj and qi < qj and rng.random() < 0.7:
                    c = G(rand_frac(rng, 3), rand_frac(rng, 3))
                    new_basis[j] = [x + c * y for x, y in zip(new_basis[j], basis[i])]
        basis = new_basis
    ps = sorted({p for p, _ in labels})
    F = {p: [v for v, (a, _) in zip(basis, labels) if a >= p] for p in ps}
    return weights, F, labels, forms


def rank3_motive(x1, x2, finite=()):
    """``Q(0)`` extended by a rank-2 weight -1 piece, with one real place.

    ``F^0`` is spanned by ``e0 + x1 e1 + x2 e2`` and ``e1 + i e2``; the
    weight -1 piece carries the form ``[[0, 1], [-1, 0]]``.
    """
    from heightlab.geoheight import Polarization
    from heightlab.hodge import GaussianRational, MixedHodgeStructure, NumericField
    from heightlab.motives import ArchPlaceData, MotiveData

    W = Filtration.from_weights([0, -1, -1])
    pols = {0: Polarization.of(0, [[1]]), -1: Polarization.of(-1, [[0, 1], [-1, 0]])}
    exact = all(isinstance(x, (int, Fraction, GaussianRational)) for x in (x1, x2))
    K = None if exact else NumericField(128)
    i = GaussianRational(0, 1) if exact else 1j
    H = MixedHodgeStructure.build(W, {0: [[1, x1, x2], [0, 1, i]]}, K=K, prec=128)
    return MotiveData(3, W, pols, list(finite), [ArchPlaceData("inf", "real", H)], "rank3")
