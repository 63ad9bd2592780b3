from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
import sympy

from conftest import random_integer_tensor
from phyloinv.errors import FormatError, ShapeMismatchError, TermCountGuardError
from phyloinv.invariants import pull_back
from phyloinv.poly import (
    GeneratorSet,
    Polynomial,
    determinant_poly,
    entry,
    estimate_tilde_terms,
    evaluate,
    evaluate_at,
    extract_z_coefficients,
    parse_variable,
    rebuild_from_z,
    substitute_tilde,
    z_coefficients,
    zvar,
)


def _det2() -> Polynomial:
    """2x2 determinant in the entries of a 2x2 tensor."""
    return determinant_poly((0, 1), (0, 1), lambda r, c: entry(r, c))


def test_arithmetic():
    x, y = Polynomial.var(entry(0, 0)), Polynomial.var(entry(1, 1))
    f = (x + y) ** 2 - x * x - y * y
    assert f == (x * y).scale(2)
    assert (x - x).is_zero()
    assert f.degree() == 2
    assert set(f.variables()) == {entry(0, 0), entry(1, 1)}
    assert hash(f) == hash((x * y) * 2)


def test_canonical_key_is_monic():
    x, y = Polynomial.var(entry(0)), Polynomial.var(entry(1))
    assert (x - y).canonical_key() == (y - x).canonical_key()
    assert (x * 3 + y * 6).canonical_key() == (x + y * 2).canonical_key()


def test_determinant_poly_matches_sympy():
    p = _det2()
    assert len(p) == 2
    assert evaluate_at(p, {entry(0, 0): 3, entry(0, 1): 5, entry(1, 0): 2, entry(1, 1): 7}) == 11

    symbols = sympy.Matrix(3, 3, lambda i, j: sympy.Symbol(f"p{i}{j}"))
    expected = sympy.Poly(symbols.det(), *symbols)
    got = determinant_poly((0, 1, 2), (0, 1, 2), lambda r, c: entry(r, c))
    assert len(got) == len(expected.terms())
    values = {entry(i, j): Fraction(i * 3 + j + 1) ** 2 for i in range(3) for j in range(3)}
    subs = {sympy.Symbol(f"p{i}{j}"): int(values[entry(i, j)]) for i in range(3) for j in range(3)}
    assert evaluate_at(got, values) == int(symbols.det().subs(subs))


def test_determinant_poly_order_cap():
    with pytest.raises(ShapeMismatchError):
        determinant_poly(tuple(range(6)), tuple(range(6)), lambda r, c: entry(r, c), max_order=5)


def test_parse_variable():
    assert parse_variable("P[0,1,2]") == entry(0, 1, 2)
    assert parse_variable("z2[3,1]") == zvar(2, 3, 1)
    assert str(zvar(2, 3, 1)) == "z2[3,1]"
    with pytest.raises(FormatError):
        parse_variable("Q[1]")


def test_tilde_round_trip_and_numeric_agreement(rng):
    f = _det2()
    states = (3, 2)
    g = substitute_tilde(f, 2, states, symbolic=True)
    assert g.has_z()
    assert rebuild_from_z(z_coefficients(g)) == g

    gens = extract_z_coefficients(g, 2, states)
    assert gens.states == states
    assert all(not poly.has_z() for poly in gens.polys)

    for _ in range(20):
        p0 = random_integer_tensor(rng, states, ("a", "b"))
        z = [rng.integers(-5, 6, size=(l, 2)).tolist() for l in states]
        symbolic_value = evaluate(g, p0, z)
        numeric = substitute_tilde(f, 2, states, symbolic=False, z_values=z)
        assert evaluate(numeric, p0) == symbolic_value
        assert evaluate(f, pull_back(p0, z)) == symbolic_value


def test_tilde_coefficients_vanish_on_pullbacks(rng):
    """Every z-coefficient vanishes where the base vanishes after every pull-back."""
    f = _det2()
    gens = extract_z_coefficients(substitute_tilde(f, 2, (3, 3)), 2, (3, 3))
    u, v = rng.integers(1, 5, size=3), rng.integers(1, 5, size=3)
    rank_one = np.multiply.outer(u, v).astype(object)
    p = random_integer_tensor(rng, (3, 3), ("a", "b"))
    p = type(p).from_array(rank_one, ("a", "b"), "exact")
    assert all(evaluate(poly, p) == 0 for poly in gens.polys)


def test_tilde_guard():
    f = _det2()
    assert estimate_tilde_terms(f, (4, 4)) == 2 * 16**2
    with pytest.raises(TermCountGuardError) as info:
        substitute_tilde(f, 2, (4, 4), term_guard=100)
    assert info.value.estimate == 512


def test_tilde_rejects_bad_inputs():
    f = _det2()
    with pytest.raises(ShapeMismatchError):
        substitute_tilde(f, 2, (3, 3), symbolic=False)
    with pytest.raises(ShapeMismatchError):
        substitute_tilde(f, 2, (3, 3), symbolic=False, z_values=[[[1, 0]] * 2, [[1, 0]] * 3])
    with pytest.raises(ShapeMismatchError):
        substitute_tilde(Polynomial.var(entry(0, 2)), 2, (3, 3))


def test_evaluate_float_mode(rng):
    p = random_integer_tensor(rng, (2, 2), ("a", "b")).to_mode("float")
    value = evaluate(_det2(), p)
    assert isinstance(value, float)
    assert value == pytest.approx(float(p.data[0, 0] * p.data[1, 1] - p.data[0, 1] * p.data[1, 0]))


def test_evaluate_reports_bad_index():
    p = random_integer_tensor(np.random.default_rng(0), (2, 2), ("a", "b"))
    with pytest.raises(ShapeMismatchError):
        evaluate(Polynomial.var(entry(0, 2)), p)
    with pytest.raises(ShapeMismatchError):
        evaluate(Polynomial.var(zvar(1, 0, 0)), p)


def test_generator_set_bookkeeping():
    gs = GeneratorSet(kappa=2, states=(2, 2))
    gs.append(_det2(), "edge:a|b")
    gs.append(Polynomial(), "empty")
    gs.append(_det2().scale(-3), "edge:copy")
    assert len(gs) == 2
    assert len(gs.deduplicated()) == 1
    assert gs.source_counts() == {"edge": 2}
    assert GeneratorSet.zero(2, 3).is_trivial()
    bad = GeneratorSet(kappa=2, states=(2, 2), polys=[Polynomial.var(entry(0, 0, 0))])
    with pytest.raises(ShapeMismatchError):
        bad.validate()
