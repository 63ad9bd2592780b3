from fractions import Fraction

import numpy as np
import pytest

from phyloinv import linalg


def _rows(values):
    return [[Fraction(x) for x in row] for row in values]


def test_rank_and_pivots():
    m = _rows([[0, 2, 4], [0, 1, 2], [1, 0, 1]])
    info = linalg.bareiss_echelon(m)
    assert info.rank == 2
    assert info.pivot_cols == (0, 1)
    assert info.pivot_rows == (2, 1)


def test_rank_with_fractions():
    m = [[Fraction(1, 3), Fraction(2, 3)], [Fraction(1, 2), Fraction(1)]]
    assert linalg.rank(m) == 1


def test_determinant_matches_numpy(rng):
    for _ in range(20):
        a = rng.integers(-5, 6, size=(4, 4))
        det = linalg.determinant(_rows(a.tolist()))
        assert abs(float(det) - float(np.linalg.det(a))) < 1e-6


def test_determinant_requires_square():
    with pytest.raises(ValueError):
        linalg.determinant(_rows([[1, 2, 3], [4, 5, 6]]))


def test_rank_factorization_reproduces_matrix(rng):
    for _ in range(20):
        left = rng.integers(-4, 5, size=(5, 2))
        right = rng.integers(-4, 5, size=(2, 6))
        m = _rows((left @ right).tolist())
        fact = linalg.rank_factorization(m)
        assert len(fact.pivot_cols) == linalg.rank(m)
        assert linalg.matmul(fact.left, fact.right) == m


def test_rref_pivot_columns_are_unit():
    rows, pivots = linalg.rref(_rows([[2, 4, 1], [1, 2, 1]]))
    assert pivots == (0, 2)
    for r, c in enumerate(pivots):
        assert [row[c] for row in rows] == [1 if i == r else 0 for i in range(len(rows))]


def test_rank_invariant_under_permutation(rng):
    a = rng.integers(-3, 4, size=(5, 3)) @ rng.integers(-3, 4, size=(3, 6))
    base = linalg.rank(_rows(a.tolist()))
    permuted = a[rng.permutation(5)][:, rng.permutation(6)]
    assert linalg.rank(_rows(permuted.tolist())) == base
    assert base <= 3
