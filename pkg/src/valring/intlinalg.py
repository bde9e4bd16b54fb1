"""Exact integer and rational matrix routines: rank, determinant, inverse,
row-style Hermite normal form, integer left kernels and Smith invariant factors.

Matrices are lists of rows.  Integer routines never leave Z.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Matrix = list[list[int]]


def _copy(m):
    return [list(r) for r in m]


def rank(mat: Sequence[Sequence]) -> int:
    rows = [[Fraction(x) for x in r] for r in mat]
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c] / rows[r][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        if r == len(rows):
            break
    return r


def det(mat: Sequence[Sequence]) -> Fraction:
    n = len(mat)
    a = [[Fraction(x) for x in r] for r in mat]
    if any(len(r) != n for r in a):
        raise ValueError("determinant of a non-square matrix")
    result = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            result = -result
        result *= a[c][c]
        for i in range(c + 1, n):
            if a[i][c]:
                f = a[i][c] / a[c][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return result


def int_det(mat: Sequence[Sequence[int]]) -> int:
    d = det(mat)
    assert d.denominator == 1
    return int(d)


def inverse(mat: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(mat)
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(mat)]
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [x / p for x in a[c]]
        for i in range(n):
            if i != c and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return [r[n:] for r in a]


def int_inverse(mat: Sequence[Sequence[int]]) -> Matrix:
    """Inverse of a unimodular integer matrix."""
    inv = inverse(mat)
    if any(x.denominator != 1 for r in inv for x in r):
        raise ValueError("matrix is not unimodular")
    return [[int(x) for x in r] for r in inv]


def adjugate(mat: Sequence[Sequence[int]]) -> Matrix:
    """Adjugate of a nonsingular integer matrix."""
    d = det(mat)
    inv = inverse(mat)
    adj = [[x * d for x in r] for r in inv]
    return [[int(x) for x in r] for r in adj]


def transpose(mat):
    return [list(c) for c in zip(*mat)] if mat else []


def matmul(a, b):
    bt = transpose(b)
    return [[sum(x * y for x, y in zip(r, c)) for c in bt] for r in a]


def vecmat(v, m):
    if not m:
        return []
    return [sum(v[i] * m[i][j] for i in range(len(v))) for j in range(len(m[0]))]


def hermite_rows(mat: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``U`` unimodular and ``U @ mat == H``.  The nonzero
    rows of ``H`` come first, are in echelon form with positive pivots, and
    entries above each pivot are reduced into ``[0, pivot)``.
    """
    a = _copy(mat)
    m = len(a)
    ncols = len(a[0]) if a else 0
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    r = 0
    for c in range(ncols):
        if r == m:
            break
        # gcd-reduce column c among rows r.. by repeated Euclid
        while True:
            nz = [i for i in range(r, m) if a[i][c]]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(a[i][c]))
            a[r], a[piv] = a[piv], a[r]
            u[r], u[piv] = u[piv], u[r]
            done = True
            for i in range(r + 1, m):
                if a[i][c]:
                    q = a[i][c] // a[r][c]
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
                    if a[i][c]:
                        done = False
            if done:
                break
        if r < m and a[r][c]:
            if a[r][c] < 0:
                a[r] = [-x for x in a[r]]
                u[r] = [-x for x in u[r]]
            p = a[r][c]
            for i in range(r):
                q = a[i][c] // p
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
            r += 1
    return a, u


def lattice_basis(vectors: Sequence[Sequence[int]]) -> Matrix:
    """A basis (HNF rows) of the Z-span of integer ``vectors``."""
    if not vectors:
        return []
    h, _ = hermite_rows(vectors)
    return [row for row in h if any(row)]


def left_kernel(mat: Sequence[Sequence[int]]) -> Matrix:
    """Basis of ``{x in Z^m : x @ mat == 0}`` for an ``m x k`` integer matrix."""
    m = len(mat)
    if m == 0:
        return []
    if not mat[0]:
        return [[int(i == j) for j in range(m)] for i in range(m)]
    h, u = hermite_rows(mat)
    kern = [u[i] for i in range(m) if not any(h[i])]
    return lattice_basis(kern) if kern else []


def smith_invariants(mat: Sequence[Sequence[int]]) -> list[int]:
    """Diagonal of the Smith normal form, each dividing the next.

    Zeros (rank deficiency) are reported at the end.
    """
    a = _copy(mat)
    m = len(a)
    n = len(a[0]) if a else 0
    diag = []
    t = 0
    while t < min(m, n):
        nz = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, n) if a[i][j]]
        if not nz:
            break
        _, pi, pj = min(nz)
        a[t], a[pi] = a[pi], a[t]
        for row in a:
            row[t], row[pj] = row[pj], row[t]
        while True:
            p = a[t][t]
            changed = False
            for i in range(t + 1, m):
                q = a[i][t] // p
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[t])]
                if a[i][t]:
                    changed = True
            for j in range(t + 1, n):
                q = a[t][j] // p
                if q:
                    for row in a:
                        row[j] -= q * row[t]
                if a[t][j]:
                    changed = True
            if not changed:
                bad = next(
                    ((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p),
                    None,
                )
                if bad is None:
                    break
                a[t] = [x + y for x, y in zip(a[t], a[bad[0]])]
                changed = True
            # move the smallest nonzero entry of row/column t to the pivot
            cands = [(abs(a[i][t]), i, t) for i in range(t, m) if a[i][t]]
            cands += [(abs(a[t][j]), t, j) for j in range(t, n) if a[t][j]]
            _, pi, pj = min(cands)
            a[t], a[pi] = a[pi], a[t]
            for row in a:
                row[t], row[pj] = row[pj], row[t]
        diag.append(abs(a[t][t]))
        t += 1
    diag += [0] * (min(m, n) - len(diag))
    return diag


def common_denominator(values) -> int:
    d = 1
    for v in values:
        d = d * Fraction(v).denominator // gcd(d, Fraction(v).denominator)
    return d
