"""Exact integer determinants."""
from __future__ import annotations


def bareiss_det(rows) -> int:
    """Determinant of an integer matrix by fraction-free elimination."""
    a = [[int(x) for x in r] for r in rows]
    n = len(a)
    if any(len(r) != n for r in a):
        raise ValueError("matrix must be square")
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def tridiagonal_det(diag, off) -> int:
    """Continuant recurrence for a symmetric integer tridiagonal matrix."""
    diag = [int(d) for d in diag]
    off = [int(o) for o in off]
    if len(off) != max(len(diag) - 1, 0):
        raise ValueError("need len(off) == len(diag) - 1")
    f_prev, f = 1, 1
    for k, d in enumerate(diag):
        if k == 0:
            f_prev, f = 1, d
        else:
            f_prev, f = f, d * f - off[k - 1] ** 2 * f_prev
    return f if diag else 1
