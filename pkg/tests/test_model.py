from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from phyloinv.errors import ParamsError, ShapeMismatchError
from phyloinv.model import (
    GeneralParams,
    ModelParams,
    frequencies,
    identity_params,
    joint,
    joint_history,
    joint_inductive,
    psi,
    reroot_stochastic,
    sample_mixing_params,
    sample_params,
    simulate_sequences,
    star_params,
    stochastic_to_general,
)
from phyloinv.tensor import star
from phyloinv.tree import parse_newick

SMALL_TREES = [
    "(a,b);",
    "(a,b,c);",
    "((a,b),(c,d));",
    "(a,b,c,d);",
    "((a,b),c,(d,e));",
    "((a,b),(c,d,e));",
    "(a,b,c,d,e);",
]


@pytest.mark.parametrize("newick", SMALL_TREES)
@pytest.mark.parametrize("kappa", [2, 3])
@pytest.mark.parametrize("mode", ["stochastic", "general"])
def test_history_matches_inductive(newick, kappa, mode):
    t = parse_newick(newick)
    for seed in range(20):
        params = sample_params(t, kappa, seed, mode)
        assert joint_history(t, params).equals(joint_inductive(t, params))


def test_stochastic_joint_is_distribution(five_taxa):
    params = sample_params(five_taxa, 2, 11)
    p = joint(five_taxa, params)
    assert p.taxa == five_taxa.taxa_order
    assert p.total() == 1
    assert all(x >= 0 for x in p.entries())


def test_cherry_order_does_not_matter(five_taxa):
    params = sample_params(five_taxa, 3, 5, "general")
    reference = joint_inductive(five_taxa, params)
    for seed in range(5):
        assert joint_inductive(five_taxa, params, cherry_seed=seed).equals(reference)


def test_root_independence_stochastic(five_taxa):
    params = sample_params(five_taxa, 2, 21)
    reference = joint(five_taxa, params)
    for v in sorted(five_taxa.vertices):
        moved = reroot_stochastic(five_taxa, params, v)
        assert moved.root == v
        assert not moved.stochastic_violations()
        assert joint(five_taxa, moved).equals(reference)


def test_root_independence_general(five_taxa):
    params = sample_params(five_taxa, 3, 4, "general")
    reference = psi(five_taxa, params)
    for v in sorted(five_taxa.internal_vertices):
        assert psi(five_taxa, params.reroot(five_taxa, v)).equals(reference)


def test_stochastic_to_general_keeps_joint(five_taxa):
    params = sample_params(five_taxa, 3, 8)
    assert psi(five_taxa, stochastic_to_general(params, five_taxa)).equals(joint(five_taxa, params))


def test_identity_params_give_diagonal(quartet):
    p = joint(quartet, identity_params(quartet, 3))
    for idx in np.ndindex(*p.shape):
        assert p.data[idx] == (Fraction(1, 3) if len(set(idx)) == 1 else 0)


def test_scaling_an_edge_scales_psi(quartet):
    params = sample_params(quartet, 2, 2, "general")
    e = next(iter(params.matrices))
    assert psi(quartet, params.scale_edge(*e, 3)).equals(psi(quartet, params).scale(3))


@pytest.mark.parametrize("left", ["((a1,a2),(a3,x));", "(a1,a2,x);", "(a1,(a2,x),a3);"])
@pytest.mark.parametrize("right", ["(x,a4,a5);", "((x,a4),(a5,a6));"])
def test_star_params_match_tensor_join(left, right):
    t1, t2 = parse_newick(left), parse_newick(right)
    for seed in range(9):
        u1 = sample_params(t1, 2, seed, "general")
        u2 = sample_params(t2, 2, 1000 + seed, "general")
        joined, u = star_params(t1, u1, t2, u2, "x", "x")
        expected = star(psi(t1, u1), psi(t2, u2), p_idx="x", q_idx="x")
        got = psi(joined, u)
        assert got.taxa == expected.taxa == joined.taxa_order
        assert got.equals(expected)


def test_star_params_kappa_mismatch():
    t = parse_newick("(a,b,x);")
    with pytest.raises(ShapeMismatchError):
        star_params(t, sample_params(t, 2, 0, "general"), t, sample_params(t, 3, 0, "general"), "x", "x")


def test_params_validation(quartet):
    params = sample_params(quartet, 2, 0)
    bad = dict(params.matrices)
    bad.pop(next(iter(bad)))
    with pytest.raises(ParamsError):
        ModelParams(root=params.root, pi=params.pi, matrices=bad).validate(quartet)
    skewed = ModelParams(root=params.root, pi=[Fraction(1, 3), Fraction(1, 3)], matrices=params.matrices)
    with pytest.raises(ParamsError):
        skewed.validate(quartet)
    skewed.validate(quartet, strict=False)
    with pytest.raises(ParamsError):
        joint(quartet, params, method="magic")
    with pytest.raises(ParamsError):
        sample_params(quartet, 2, 0, mode="other")


def test_general_matrix_transposes_reverse_edge(quartet):
    params = sample_params(quartet, 3, 9, "general")
    (u, v), m = next(iter(params.matrices.items()))
    assert np.array_equal(params.matrix(v, u), m.T)
    assert params.equals(params.reroot(quartet, max(quartet.internal_vertices)))


def test_sample_params_deterministic(five_taxa):
    a = sample_params(five_taxa, 3, 42)
    b = sample_params(five_taxa, 3, 42)
    assert joint(five_taxa, a).equals(joint(five_taxa, b))
    assert not a.stochastic_violations()


def test_mixing_params(quartet):
    params = sample_mixing_params(quartet, 4, 3)
    assert not params.stochastic_violations()
    for (u, v), m in params.matrices.items():
        pendant = quartet.is_leaf(u) or quartet.is_leaf(v)
        for i in range(4):
            change = 1 - m[i, i]
            lo, hi = (Fraction(2, 100), Fraction(12, 100)) if pendant else (Fraction(15, 100), Fraction(30, 100))
            assert lo <= change <= hi
            assert len({m[i, j] for j in range(4) if j != i}) == 1
    with pytest.raises(ParamsError):
        sample_mixing_params(quartet, 1, 0)


def test_simulation_is_deterministic_and_thread_independent(quartet):
    params = sample_params(quartet, 2, 1)
    one = simulate_sequences(quartet, params, sites=5000, seed=7, chunk_sites=1000, threads=1)
    many = simulate_sequences(quartet, params, sites=5000, seed=7, chunk_sites=1000, threads=4)
    assert one.equals(many)
    assert one.total() == 5000
    assert one.taxa == quartet.taxa_order
    other = simulate_sequences(quartet, params, sites=5000, seed=8, chunk_sites=1000)
    assert not other.equals(one)


def test_simulated_frequencies_approach_joint(quartet):
    params = sample_params(quartet, 2, 3)
    counts = simulate_sequences(quartet, params, sites=40000, seed=1)
    freq = frequencies(counts).to_mode("float")
    exact = joint(quartet, params).to_mode("float")
    assert np.max(np.abs(freq.data.astype(float) - exact.data.astype(float))) < 0.02


def test_simulation_rejects_bad_input(quartet):
    params = sample_params(quartet, 2, 1)
    with pytest.raises(ParamsError):
        simulate_sequences(quartet, params, sites=0, seed=1)
    with pytest.raises(ParamsError):
        simulate_sequences(quartet, stochastic_to_general(params), sites=10, seed=1)


def test_general_params_need_matrices():
    with pytest.raises(ParamsError):
        GeneralParams(root=0, matrices={}).kappa
