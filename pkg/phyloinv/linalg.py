"""Exact rational linear algebra on lists of ``Fraction`` rows.

Pivoting is deterministic everywhere: columns are scanned left to right and
the first remaining row with a nonzero entry in that column is the pivot.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import List, NamedTuple, Sequence, Tuple

Row = List[Fraction]


class EchelonInfo(NamedTuple):
    rank: int
    pivot_rows: Tuple[int, ...]  # original row indices, in pivot order
    pivot_cols: Tuple[int, ...]


class RankFactorization(NamedTuple):
    left: List[Row]  # rows x rank
    right: List[Row]  # rank x cols
    pivot_cols: Tuple[int, ...]


def as_fraction_rows(rows: Sequence[Sequence[object]]) -> List[Row]:
    return [[x if isinstance(x, Fraction) else Fraction(x) for x in row] for row in rows]  # type: ignore[arg-type]


def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> List[List[int]]:
    """Scale each row by the lcm of its denominators; row scaling preserves rank."""
    out: List[List[int]] = []
    for row in rows:
        den = 1
        for x in row:
            den = math.lcm(den, x.denominator)
        out.append([int(x * den) for x in row])
    return out


def bareiss_echelon(rows: Sequence[Sequence[Fraction]]) -> EchelonInfo:
    """Fraction-free Gaussian elimination; returns the rank and the pivot structure."""
    work = _integer_rows(rows)
    n_rows = len(work)
    n_cols = len(work[0]) if work else 0
    order = list(range(n_rows))
    prev = 1
    r = 0
    pivot_cols: List[int] = []
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if work[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            work[r], work[piv] = work[piv], work[r]
            order[r], order[piv] = order[piv], order[r]
        pivot_cols.append(c)
        p = work[r][c]
        for i in range(r + 1, n_rows):
            a = work[i][c]
            row_i = work[i]
            row_r = work[r]
            for j in range(c + 1, n_cols):
                # exact division is guaranteed by Sylvester's identity
                row_i[j] = (p * row_i[j] - a * row_r[j]) // prev
            row_i[c] = 0
        prev = p
        r += 1
    return EchelonInfo(rank=r, pivot_rows=tuple(order[:r]), pivot_cols=tuple(pivot_cols))


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return bareiss_echelon(rows).rank


def determinant(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("determinant_needs_square_matrix")
    if n == 0:
        return Fraction(1)
    work = [list(r) for r in as_fraction_rows(rows)]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if work[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            work[c], work[piv] = work[piv], work[c]
            det = -det
        p = work[c][c]
        det *= p
        for i in range(c + 1, n):
            f = work[i][c] / p
            if f:
                for j in range(c, n):
                    work[i][j] -= f * work[c][j]
    return det


def rref(rows: Sequence[Sequence[Fraction]]) -> Tuple[List[Row], Tuple[int, ...]]:
    """Reduced row echelon form; pivot columns found by Bareiss."""
    info = bareiss_echelon(rows)
    work = [list(r) for r in as_fraction_rows(rows)]
    r = 0
    for c in info.pivot_cols:
        piv = next(i for i in range(r, len(work)) if work[i][c] != 0)
        work[r], work[piv] = work[piv], work[r]
        p = work[r][c]
        work[r] = [x / p for x in work[r]]
        for i in range(len(work)):
            if i != r and work[i][c] != 0:
                f = work[i][c]
                work[i] = [a - f * b for a, b in zip(work[i], work[r])]
        r += 1
    return work[: info.rank], info.pivot_cols


def rank_factorization(rows: Sequence[Sequence[Fraction]]) -> RankFactorization:
    """``M = left · right`` with ``left = M[:, pivots]`` and ``right`` the nonzero RREF rows."""
    m = as_fraction_rows(rows)
    right, pivots = rref(m)
    left = [[row[c] for c in pivots] for row in m]
    return RankFactorization(left=left, right=right, pivot_cols=pivots)


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> List[Row]:
    if a and len(a[0]) != len(b):
        raise ValueError("matmul_dimension_mismatch")
    cols = len(b[0]) if b else 0
    return [[sum((row[k] * b[k][j] for k in range(len(b))), Fraction(0)) for j in range(cols)] for row in a]
