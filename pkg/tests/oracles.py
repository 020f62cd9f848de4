"""Slow reference computations, written without any of the package's matrix code."""

from __future__ import annotations

import itertools
from fractions import Fraction


def rank_mod_p(rows, p: int) -> int:
    m = [[x % p for x in r] for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], -1, p)
        m[rank] = [x * inv % p for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][c]:
                f = m[i][c]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def rank_q(rows) -> int:
    m = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(rank + 1, len(m)):
            if m[i][c]:
                f = m[i][c] / m[rank][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def _koszul_map(sys, p: int, q: int):
    """Dense matrix of ``wedge^p (x) M_q -> wedge^{p-1} (x) M_{q+1}`` built from scratch."""
    h = sys.h0_L
    L = sys.L_points

    def basis(pp, qq):
        out = []
        for s in range(sys.n_summands):
            for x in sys.basis(s, qq):
                for I in itertools.combinations(range(h), pp):
                    out.append((s, x, I))
        return out

    src = basis(p, q)
    dst = basis(p - 1, q + 1)
    index = {b: i for i, b in enumerate(dst)}
    mat = [[0] * len(src) for _ in dst]
    for j, (s, x, I) in enumerate(src):
        for k, e in enumerate(I):
            y = tuple(a + b for a, b in zip(x, L[e]))
            J = I[:k] + I[k + 1 :]
            mat[index[(s, y, J)]][j] += (-1) ** k
    return mat, len(src), len(dst)


def naive_koszul_dim(sys, p: int, q: int, prime: int = 32003) -> int:
    if q < 0 or p < 0 or p > sys.h0_L:
        return 0
    if p == 0:
        n_src, r_out = sys.h0_total(q), 0
    else:
        out, n_src, _ = _koszul_map(sys, p, q)
        r_out = rank_mod_p(out, prime) if out else 0
    r_in = 0
    if q > 0 and p + 1 <= sys.h0_L:
        inc, _, _ = _koszul_map(sys, p + 1, q - 1)
        r_in = rank_mod_p(inc, prime) if inc else 0
    return n_src - r_out - r_in


def compose_is_zero(sys, p: int, q: int) -> bool:
    """``d o d = 0`` on ``wedge^p (x) M_q`` with the from-scratch matrices."""
    if p < 2:
        return True
    a, _, _ = _koszul_map(sys, p, q)
    b, _, _ = _koszul_map(sys, p - 1, q + 1)
    if not a or not b:
        return True
    for i in range(len(b)):
        for j in range(len(a[0])):
            if sum(b[i][k] * a[k][j] for k in range(len(a))):
                return False
    return True
