from __future__ import annotations

import numpy as np
import pytest

from conftest import random_integer_tensor
from phyloinv.errors import BaseSetRequiredError, ShapeMismatchError, TermCountGuardError
from phyloinv.invariants import (
    count_edge_invariants,
    edge_invariants,
    minor_count,
    probe_eval,
    resolve_base,
    star_generators,
    star_splits,
    subarray_probe,
    tree_axes,
    tree_generators,
)
from phyloinv.model import psi, sample_params
from phyloinv.poly import GeneratorSet, determinant_poly, entry, evaluate
from phyloinv.tensor import Tensor, act
from phyloinv.tree import Split, parse_newick
from schemas.models import ProbeConfig


def _vanishes(gs: GeneratorSet, p: Tensor) -> bool:
    return all(evaluate(poly, p) == 0 for poly in gs.polys)


def test_five_taxa_edge_invariant_count(five_taxa):
    axes = tree_axes(five_taxa, 2)
    assert minor_count(axes, Split.parse("a1,a2|a3,a4,a5", five_taxa.taxa_order), 2) == 224
    assert count_edge_invariants(five_taxa, 2) == 448
    gs = edge_invariants(five_taxa, 2)
    assert len(gs) == 448
    assert gs.source_counts() == {"edge": 448}
    assert all(poly.degree() == 3 for poly in gs.polys)


def test_edge_invariants_cap(five_taxa):
    assert len(edge_invariants(five_taxa, 2, cap=10)) == 10


def test_edge_invariants_vanish_on_model_points(five_taxa, rng):
    gs = edge_invariants(five_taxa, 2)
    for seed in range(100):
        p = psi(five_taxa, sample_params(five_taxa, 2, seed, "general"))
        assert _vanishes(gs, p)
    for _ in range(100):
        p = random_integer_tensor(rng, (2,) * 5, five_taxa.taxa_order)
        assert not _vanishes(gs, p)


def test_edge_invariants_on_small_trees():
    assert len(edge_invariants(parse_newick("(a,b,c);"), 2)) == 0
    quartet = edge_invariants(parse_newick("((a,b),(c,d));"), 2)
    assert len(quartet) == 16


def test_tree_generators_five_taxa(five_taxa):
    gs = tree_generators(five_taxa, 2)
    assert len(gs) == 448
    assert gs.states == (2,) * 5
    p = psi(five_taxa, sample_params(five_taxa, 2, 3, "general"))
    assert _vanishes(gs, p)


def test_star_splits():
    assert len(star_splits(3)) == 3
    assert [str(s) for s in star_splits(3, "edges")] == ["x1|x2,x3", "x1,x3|x2", "x1,x2|x3"]
    with pytest.raises(ShapeMismatchError):
        star_splits(3, "other")


def test_star_generators_kappa2():
    zero = GeneratorSet.zero(2, 3)
    assert len(star_generators(2, (2, 2, 2), zero)) == 0
    assert len(star_generators(2, (3, 2, 2), zero)) == 4
    assert len(star_generators(2, (3, 2, 2), zero, mode="skip_tilde")) == 4
    with pytest.raises(ShapeMismatchError):
        star_generators(2, (1, 2, 2), zero)


def test_star_generators_tilde_of_determinant(rng):
    base = GeneratorSet(kappa=2, states=(2, 2))
    base.append(determinant_poly((0, 1), (0, 1), lambda r, c: entry(r, c)), "det")
    gs = star_generators(2, (3, 2), base)
    assert gs.states == (3, 2)
    assert gs.source_counts().get("tilde", 0) > 0
    u, v = rng.integers(1, 6, size=3), rng.integers(1, 6, size=2)
    rank_one = Tensor.from_array(np.multiply.outer(u, v).astype(object), ("x1", "x2"), "exact")
    assert _vanishes(gs, rank_one)
    assert not _vanishes(gs, random_integer_tensor(rng, (3, 2), ("x1", "x2")))
    with pytest.raises(BaseSetRequiredError):
        star_generators(2, (3, 2), base, mode="skip_tilde")


def test_star_generators_keep_base_at_kappa(strassen):
    gs = star_generators(3, (3, 3, 3), strassen)
    assert 0 < len(gs) <= 27
    assert set(gs.source_counts()) == {"base"}


def test_star_generators_term_guard(strassen):
    with pytest.raises(TermCountGuardError):
        star_generators(3, (4, 3, 3), strassen, term_guard=1000)


def test_strassen_set_vanishes_on_model_points(strassen, rng):
    t = parse_newick("(a,b,c);")
    for seed in range(5):
        p = psi(t, sample_params(t, 3, seed, "general"))
        assert _vanishes(strassen, p)
    p = random_integer_tensor(rng, (3, 3, 3), ("a", "b", "c"))
    assert not _vanishes(strassen, p)


def test_resolve_base(strassen):
    assert resolve_base(None, 2, 3).is_trivial()
    assert resolve_base(strassen, 3, 3) is strassen
    assert resolve_base({3: strassen}, 3, 3) is strassen
    with pytest.raises(BaseSetRequiredError):
        resolve_base(None, 3, 3)
    with pytest.raises(BaseSetRequiredError):
        resolve_base(None, 4, 3)
    with pytest.raises(BaseSetRequiredError):
        tree_generators(parse_newick("((a,b),(c,d));"), 3)


def test_probe_on_model_point_and_random(strassen, rng):
    t = parse_newick("(a,b,c);")
    cfg = ProbeConfig(trials=3, seed=1)
    point = psi(t, sample_params(t, 3, 2, "general"))
    widen = rng.integers(-4, 5, size=(3, 4)).tolist()
    wide = act(point, "a", widen)
    assert wide.shape == (4, 3, 3)
    report = probe_eval(strassen, wide, cfg)
    assert report.first_nonzero is None
    assert not report.certificate
    assert len(report.trials) == 3
    assert report.miss_bound == pytest.approx((12 / 19) ** 3)

    noisy = random_integer_tensor(rng, (4, 3, 3), ("a", "b", "c"))
    report = probe_eval(strassen, noisy, cfg, location="v0")
    assert report.certificate
    assert report.first_nonzero is not None
    assert report.first_nonzero.location == "v0"
    assert report.miss_bound == 0.0


def test_probe_is_seeded(strassen, rng):
    noisy = random_integer_tensor(rng, (3, 3, 3), ("a", "b", "c"))
    cfg = ProbeConfig(trials=2, seed=5)
    first = probe_eval(strassen, noisy, cfg)
    second = probe_eval(strassen, noisy, cfg, threads=2)
    assert [t.values for t in first.trials] == [t.values for t in second.trials]


def test_probe_rejects_small_states(strassen, rng):
    with pytest.raises(ShapeMismatchError):
        probe_eval(strassen, random_integer_tensor(rng, (2, 3, 3), ("a", "b", "c")), ProbeConfig())


def test_subarray_probe_passes_on_counterexample(counterexample, strassen):
    result = subarray_probe(counterexample, 3)
    assert result.checked == 4
    assert result.passed
    assert subarray_probe(counterexample, 3, strassen).passed


def test_subarray_probe_catches_rank(rng):
    p = random_integer_tensor(rng, (3, 2, 2, 2), ("a", "b", "c", "d"))
    result = subarray_probe(p, 2)
    assert result.checked == 3
    assert not result.passed
    assert result.failures[0][1].startswith("rank:")
