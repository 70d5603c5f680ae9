"""Exact integer matrix kernels: fraction-free determinants and Smith normal form.

Everything here works on plain Python integers (arbitrary precision).  The
Smith reduction uses balanced remainders and a smallest-pivot heuristic; for
nonsingular matrices it can additionally reduce every entry modulo the
determinant, which keeps coefficient growth bounded by the determinant size.
That reduction is sound because det(A) * Z^n is contained in A * Z^n (Cramer),
so augmenting the column space by det(A) * I leaves the cokernel unchanged.
"""

from __future__ import annotations

import math


def bareiss_determinant(rows) -> int:
    """Exact determinant by Bareiss fraction-free Gaussian elimination.

    Args:
        rows: square matrix as a sequence of sequences of ints.

    Returns:
        det(rows) as a Python int (0 for singular input).
    """
    a = [[int(x) for x in row] for row in rows]
    n = len(a)
    if n == 0:
        return 1
    if any(len(row) != n for row in a):
        raise ValueError("determinant needs a square matrix")
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pkk, rowk = a[k][k], a[k]
        for i in range(k + 1, n):
            aik = a[i][k]
            rowi = a[i]
            for j in range(k + 1, n):
                # exact division: these are (k+1)-minors of the original matrix
                rowi[j] = (pkk * rowi[j] - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = pkk
    return sign * a[n - 1][n - 1]


def _balanced_quotient(q: int, p: int) -> int:
    """f such that q - f*p lies in (-|p|/2, |p|/2]."""
    if p < 0:
        return -_balanced_quotient(q, -p)
    return (2 * q + p) // (2 * p)


def smith_normal_form(rows, modulus: int | None = None) -> list[int]:
    """Invariant factors d_1 | d_2 | ... of an integer matrix.

    Args:
        rows: matrix as a sequence of sequences of ints (need not be square).
        modulus: optional nonzero integer D with D * Z^n inside the column
            space (any multiple of the determinant, for nonsingular square
            input).  When given, entries are kept in balanced residue form
            mod |D|, which bounds coefficient growth.

    Returns:
        The nonzero invariant factors in divisibility order.  For a
        nonsingular square matrix their product equals |det|; a rank-deficient
        matrix yields fewer factors than min(rows, cols).
    """
    a = [[int(x) for x in row] for row in rows]
    n = len(a)
    if n == 0:
        return []
    m = len(a[0])
    if any(len(row) != m for row in a):
        raise ValueError("ragged matrix")
    D = abs(modulus) if modulus else None
    if D is not None and D <= 1:
        D = None

    def bal(x):
        r = x % D
        return r - D if 2 * r > D else r

    if D is not None:
        a = [[bal(x) for x in row] for row in a]
    factors: list[int] = []
    top = 0
    while top < min(n, m):
        best = None
        for i in range(top, n):
            ai = a[i]
            for j in range(top, m):
                v = ai[j]
                if v:
                    av = -v if v < 0 else v
                    if best is None or av < best[0]:
                        best = (av, i, j)
                        if av == 1:
                            break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, bi, bj = best
        if bi != top:
            a[top], a[bi] = a[bi], a[top]
        if bj != top:
            for row in a:
                row[top], row[bj] = row[bj], row[top]
        while True:
            p = a[top][top]
            swapped = False
            for i in range(top + 1, n):
                q = a[i][top]
                if q == 0:
                    continue
                f = _balanced_quotient(q, p)
                ai, at = a[i], a[top]
                if f:
                    if D is None:
                        for j in range(top, m):
                            ai[j] -= f * at[j]
                    else:
                        for j in range(top, m):
                            ai[j] = bal(ai[j] - f * at[j])
                if ai[top]:
                    # leftover residue is strictly smaller than |p|: promote it
                    a[top], a[i] = a[i], a[top]
                    swapped = True
                    break
            if swapped:
                continue
            p = a[top][top]
            for j in range(top + 1, m):
                q = a[top][j]
                if q == 0:
                    continue
                f = _balanced_quotient(q, p)
                if f:
                    if D is None:
                        for i in range(top, n):
                            a[i][j] -= f * a[i][top]
                    else:
                        for i in range(top, n):
                            a[i][j] = bal(a[i][j] - f * a[i][top])
                if a[top][j]:
                    for i in range(top, n):
                        a[i][top], a[i][j] = a[i][j], a[i][top]
                    swapped = True
                    break
            if not swapped:
                break
        p = abs(a[top][top])
        bad = None
        if p != 1:
            for i in range(top + 1, n):
                ai = a[i]
                for j in range(top + 1, m):
                    if ai[j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
        if bad is not None:
            # pivot must divide the remaining block before it can be split off
            at, ab = a[top], a[bad]
            if D is None:
                for j in range(top, m):
                    at[j] += ab[j]
            else:
                for j in range(top, m):
                    at[j] = bal(at[j] + ab[j])
            continue
        factors.append(p)
        top += 1
    if D is not None:
        # Residue arithmetic determines each true factor only up to gcd with D
        # (and a factor equal to D itself reduces to an all-zero block), so
        # map computed pivots through gcd and pad the missing ones with D.
        # Sound only because the modulus contract guarantees full rank.
        factors = [math.gcd(f, D) for f in factors]
        factors.extend([D] * (min(n, m) - len(factors)))
    k = len(factors)
    for i in range(k):
        for j in range(i + 1, k):
            if factors[j] % factors[i]:
                g = math.gcd(factors[i], factors[j])
                factors[j] = factors[i] // g * factors[j]
                factors[i] = g
    return sorted(factors)


def smith_with_transform(
    rows, modulus: int | None = None
) -> tuple[list[int], list[list[int]]]:
    """Smith normal form with the column transform, for solving A y = w mod Z.

    Returns (diagonal, V) with U A V = diag for unimodular U, V; V is returned
    as a full square matrix (column count of A).  Without a modulus the
    diagonal list includes zeros for rank deficiency and satisfies the
    divisibility chain, but intermediate entries can grow without bound.

    With a modulus D (any nonzero multiple of the determinant of a
    nonsingular square input), entries of both A and V are kept in balanced
    residue form mod |D|.  Column j of the returned V still satisfies
    A v_j = 0 (mod diag[j]), and the points v_j / diag[j] on the torus are
    unchanged by the reduction, because every diag[j] divides D.  The
    diagonal entries multiply to |det| but are not necessarily in
    divisibility order; reordering them would break the pairing with V's
    columns, so no reordering is done.
    """
    a = [[int(x) for x in row] for row in rows]
    n = len(a)
    m = len(a[0]) if n else 0
    D = abs(modulus) if modulus else None
    if D is not None and D <= 1:
        D = None

    def bal(x):
        r = x % D
        return r - D if 2 * r > D else r

    if D is not None:
        a = [[bal(x) for x in row] for row in a]
    v = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    top = 0
    while top < min(n, m):
        best = None
        for i in range(top, n):
            ai = a[i]
            for j in range(top, m):
                x = ai[j]
                if x:
                    ax = -x if x < 0 else x
                    if best is None or ax < best[0]:
                        best = (ax, i, j)
                        if ax == 1:
                            break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, bi, bj = best
        if bi != top:
            a[top], a[bi] = a[bi], a[top]
        if bj != top:
            for row in a:
                row[top], row[bj] = row[bj], row[top]
            for row in v:
                row[top], row[bj] = row[bj], row[top]
        while True:
            p = a[top][top]
            swapped = False
            for i in range(top + 1, n):
                q = a[i][top]
                if q == 0:
                    continue
                f = _balanced_quotient(q, p)
                if f:
                    ai, at = a[i], a[top]
                    if D is None:
                        for j in range(top, m):
                            ai[j] -= f * at[j]
                    else:
                        for j in range(top, m):
                            ai[j] = bal(ai[j] - f * at[j])
                if a[i][top]:
                    a[top], a[i] = a[i], a[top]
                    swapped = True
                    break
            if swapped:
                continue
            p = a[top][top]
            for j in range(top + 1, m):
                q = a[top][j]
                if q == 0:
                    continue
                f = _balanced_quotient(q, p)
                if f:
                    if D is None:
                        for i in range(top, n):
                            a[i][j] -= f * a[i][top]
                        for i in range(m):
                            v[i][j] -= f * v[i][top]
                    else:
                        for i in range(top, n):
                            a[i][j] = bal(a[i][j] - f * a[i][top])
                        for i in range(m):
                            v[i][j] = bal(v[i][j] - f * v[i][top])
                if a[top][j]:
                    for i in range(top, n):
                        a[i][top], a[i][j] = a[i][j], a[i][top]
                    for i in range(m):
                        v[i][top], v[i][j] = v[i][j], v[i][top]
                    swapped = True
                    break
            if not swapped:
                break
        p = abs(a[top][top])
        bad = None
        if p != 1:
            for i in range(top + 1, n):
                ai = a[i]
                for j in range(top + 1, m):
                    if ai[j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
        if bad is not None:
            at, ab = a[top], a[bad]
            if D is None:
                for j in range(top, m):
                    at[j] += ab[j]
            else:
                for j in range(top, m):
                    at[j] = bal(at[j] + ab[j])
            continue
        top += 1
    diag = [a[i][i] if a[i][i] >= 0 else -a[i][i] for i in range(min(n, m))]
    # sign-normalize: flipping a column's sign is a unimodular column op
    for i in range(min(n, m)):
        if a[i][i] < 0:
            for r in range(m):
                v[r][i] = -v[r][i]
    if D is not None:
        # residues pin each factor only up to gcd with D; an all-zero block
        # means the remaining columns already satisfy A v_j = 0 mod D
        diag = [math.gcd(x, D) for x in diag]
    else:
        for i, j in zip(range(len(diag)), range(1, len(diag))):
            if diag[i] and diag[j] and diag[j] % diag[i]:
                raise AssertionError(
                    "divisibility chain violated in smith_with_transform"
                )
    return diag, v


def lattice_spans_z_d(vectors, d: int) -> bool:
    """Whether the integer span of the given d-dimensional vectors is all of Z^d."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        return d == 0
    if any(len(v) != d for v in vecs):
        raise ValueError("vector dimension mismatch")
    factors = smith_normal_form(vecs)
    return len(factors) == d and all(f == 1 for f in factors)
