from __future__ import annotations

from fractions import Fraction
from typing import List

import numpy as np
import pytest

from phyloinv.poly import GeneratorSet, Polynomial, entry
from phyloinv.tensor import Tensor
from phyloinv.tree import Tree, parse_newick

FIVE_TAXA_NEWICK = "((a1,a2),a3,(a4,a5));"


@pytest.fixture
def five_taxa() -> Tree:
    return parse_newick(FIVE_TAXA_NEWICK)


@pytest.fixture
def quartet() -> Tree:
    return parse_newick("((a,b),(c,d));")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def counterexample_tensor() -> Tensor:
    """e1⊗e1⊗f1 + e2⊗e2⊗f2 + e3⊗e3⊗f3 + e1⊗e2⊗f4."""
    data = np.zeros((3, 3, 4), dtype=int)
    for i in range(3):
        data[i, i, i] = 1
    data[0, 1, 3] = 1
    return Tensor.from_array(data.astype(object), ("a1", "a2", "a3"), "exact")


@pytest.fixture
def counterexample() -> Tensor:
    return counterexample_tensor()


def random_integer_tensor(rng: np.random.Generator, shape, taxa, bound: int = 9) -> Tensor:
    data = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        data[idx] = Fraction(int(rng.integers(-bound, bound + 1)))
    return Tensor(tuple(zip(taxa, shape)), data, "exact")


def _slice(k: int, s: int) -> List[List[Polynomial]]:
    """Slice ``s`` of a symbolic 3x3x3 tensor along axis ``k``."""
    out = []
    for i in range(3):
        row = []
        for j in range(3):
            idx = [i, j]
            idx.insert(k, s)
            row.append(Polynomial.var(entry(*idx)))
        out.append(row)
    return out


def _matmul(a, b):
    return [[sum((a[i][m] * b[m][j] for m in range(3)), Polynomial()) for j in range(3)] for i in range(3)]


def _adjugate(m):
    def minor(r: int, c: int) -> Polynomial:
        rows = [i for i in range(3) if i != r]
        cols = [j for j in range(3) if j != c]
        return m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]]

    return [[minor(j, i) * (-1 if (i + j) % 2 else 1) for j in range(3)] for i in range(3)]


def strassen_quartics() -> GeneratorSet:
    """Entries of T1·adj(T2)·T3 − T3·adj(T2)·T1 for slices along each axis."""
    out = GeneratorSet(kappa=3, states=(3, 3, 3))
    for k in range(3):
        t1, t2, t3 = (_slice(k, s) for s in range(3))
        adj = _adjugate(t2)
        left = _matmul(_matmul(t1, adj), t3)
        right = _matmul(_matmul(t3, adj), t1)
        for i in range(3):
            for j in range(3):
                out.append(left[i][j] - right[i][j], f"strassen:{k}:{i}{j}")
    return out


@pytest.fixture(scope="session")
def strassen() -> GeneratorSet:
    return strassen_quartics()
