"""Sparse multivariate polynomials with exact rational coefficients.

Two kinds of variables appear: tensor entries ``P[i1,...,in]`` and the
auxiliary entries ``z<k>[i,j]`` of the matrices that act on axis ``k``
(1-based) when a κ×…×κ polynomial is pulled back to larger state spaces.
"""
from __future__ import annotations

import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import FormatError, ShapeMismatchError, TermCountGuardError
from .tensor import Tensor

logger = logging.getLogger("phyloinv.poly")

Scalar = Union[int, Fraction]


class Variable(NamedTuple):
    kind: str  # "P" for tensor entries, "z" for auxiliary matrix entries
    index: Tuple[int, ...]

    def __str__(self) -> str:
        if self.kind == "z":
            k, i, j = self.index
            return f"z{k}[{i},{j}]"
        return "P[" + ",".join(str(i) for i in self.index) + "]"


_VAR_RE = re.compile(r"^(?:P\[(?P<p>[0-9,\s]*)\]|z(?P<k>[0-9]+)\[(?P<i>[0-9]+),(?P<j>[0-9]+)\])$")


def entry(*index: int) -> Variable:
    return Variable("P", tuple(int(i) for i in index))


def zvar(k: int, i: int, j: int) -> Variable:
    return Variable("z", (int(k), int(i), int(j)))


def parse_variable(text: str) -> Variable:
    m = _VAR_RE.match(text.strip())
    if not m:
        raise FormatError(f"bad_variable: {text!r}")
    if m.group("p") is not None:
        raw = m.group("p").strip()
        return entry(*(int(x) for x in raw.split(","))) if raw else Variable("P", ())
    return zvar(int(m.group("k")), int(m.group("i")), int(m.group("j")))


Monomial = Tuple[Tuple[Variable, int], ...]
ONE: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged: Dict[Variable, int] = dict(a)
    for v, e in b:
        merged[v] = merged.get(v, 0) + e
    return tuple(sorted(merged.items()))


def _split_mono(m: Monomial) -> Tuple[Monomial, Monomial]:
    """(P-part, z-part) of a monomial."""
    return tuple(t for t in m if t[0].kind != "z"), tuple(t for t in m if t[0].kind == "z")


class Polynomial:
    """Immutable sparse polynomial; zero coefficients are never stored."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Optional[Mapping[Monomial, Scalar]] = None) -> None:
        clean: Dict[Monomial, Fraction] = {}
        for mono, c in (terms or {}).items():
            c = c if isinstance(c, Fraction) else Fraction(c)
            if c:
                clean[tuple(sorted(mono))] = clean.get(tuple(sorted(mono)), Fraction(0)) + c
        self._terms = {m: c for m, c in clean.items() if c}
        self._hash: Optional[int] = None

    # ------------------------------------------------------------------ constructors

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls()

    @classmethod
    def constant(cls, c: Scalar) -> "Polynomial":
        return cls({ONE: c})

    @classmethod
    def var(cls, v: Variable) -> "Polynomial":
        return cls({((v, 1),): 1})

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Fraction]) -> "Polynomial":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    # ------------------------------------------------------------------ queries

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[Monomial, Fraction]]:
        return iter(sorted(self._terms.items()))

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=0)

    def z_degree(self) -> int:
        return max((sum(e for v, e in m if v.kind == "z") for m in self._terms), default=0)

    def p_degree(self) -> int:
        return max((sum(e for v, e in m if v.kind != "z") for m in self._terms), default=0)

    def variables(self) -> List[Variable]:
        return sorted({v for m in self._terms for v, _ in m})

    def has_z(self) -> bool:
        return any(v.kind == "z" for m in self._terms for v, _ in m)

    # ------------------------------------------------------------------ arithmetic

    def __add__(self, other: Union["Polynomial", Scalar]) -> "Polynomial":
        other = other if isinstance(other, Polynomial) else Polynomial.constant(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Union["Polynomial", Scalar]) -> "Polynomial":
        other = other if isinstance(other, Polynomial) else Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other: Scalar) -> "Polynomial":
        return Polynomial.constant(other) - self

    def scale(self, c: Scalar) -> "Polynomial":
        c = c if isinstance(c, Fraction) else Fraction(c)
        if not c:
            return Polynomial()
        return Polynomial._raw({m: v * c for m, v in self._terms.items()})

    def __mul__(self, other: Union["Polynomial", Scalar]) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        out: Dict[Monomial, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = _mono_mul(ma, mb)
                s = out.get(m, Fraction(0)) + ca * cb
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Polynomial._raw(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0:
            raise ValueError("negative_power")
        out = Polynomial.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other)
        return isinstance(other, Polynomial) and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # ------------------------------------------------------------------ forms

    def canonical_key(self) -> Tuple[Tuple[Monomial, Fraction], ...]:
        """Key of the monic rescaling; polynomials differing by a nonzero factor share it."""
        items = sorted(self._terms.items())
        if not items:
            return ()
        lead = items[0][1]
        return tuple((m, c / lead) for m, c in items)

    def map_variables(self, fn: Callable[[Variable], Variable]) -> "Polynomial":
        out: Dict[Monomial, Fraction] = {}
        for mono, c in self._terms.items():
            m: Monomial = ONE
            for v, e in mono:
                m = _mono_mul(m, ((fn(v), e),))
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(out)

    def evaluate_with(self, value_of: Callable[[Variable], object], as_float: bool = False) -> object:
        cache: Dict[Variable, object] = {}
        total: object = 0.0 if as_float else Fraction(0)
        for mono, c in self._terms.items():
            term: object = float(c) if as_float else c
            for v, e in mono:
                if v not in cache:
                    cache[v] = value_of(v)
                term = term * cache[v] ** e
            total = total + term
        return total

    def __repr__(self) -> str:
        return f"Polynomial({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.items():
            body = "*".join(str(v) if e == 1 else f"{v}^{e}" for v, e in mono)
            parts.append(f"{c}" if not body else (body if c == 1 else f"{c}*{body}"))
        return " + ".join(parts)


# ---------------------------------------------------------------------- minors


def _permutation_sign(perm: Sequence[int]) -> int:
    inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
    return -1 if inversions % 2 else 1


def determinant_poly(
    rows: Sequence[int],
    cols: Sequence[int],
    entry_var: Callable[[int, int], Variable],
    max_order: int = 5,
) -> Polynomial:
    """Leibniz expansion of the minor on ``rows`` × ``cols`` in the given orderings."""
    d = len(rows)
    if d != len(cols):
        raise ShapeMismatchError(f"minor_not_square: rows={d} cols={len(cols)}")
    if d > max_order:
        raise ShapeMismatchError(f"minor_order_exceeds_max: {d} > {max_order}")
    terms: Dict[Monomial, Fraction] = {}
    for perm in itertools.permutations(range(d)):
        mono: Monomial = ONE
        for r, p in zip(rows, perm):
            mono = _mono_mul(mono, ((entry_var(r, cols[p]), 1),))
        terms[mono] = terms.get(mono, Fraction(0)) + _permutation_sign(perm)
    return Polynomial(terms)


# ---------------------------------------------------------------------- tilde substitution


def estimate_tilde_terms(f: Polynomial, target_states: Sequence[int]) -> int:
    width = math.prod(int(s) for s in target_states)
    return sum(width ** sum(e for v, e in m if v.kind == "P") for m, _ in f.items())


def _check_kappa_vars(f: Polynomial, kappa: int, n: int) -> None:
    for v in f.variables():
        if v.kind != "P":
            raise ShapeMismatchError(f"tilde_source_has_z: {v}")
        if len(v.index) != n or any(i < 0 or i >= kappa for i in v.index):
            raise ShapeMismatchError(f"tilde_variable_out_of_range: {v} kappa={kappa} n={n}")


def substitute_tilde(
    f: Polynomial,
    kappa: int,
    target_states: Sequence[int],
    symbolic: bool = True,
    z_values: Optional[Sequence[Sequence[Sequence[Scalar]]]] = None,
    term_guard: int = 10_000_000,
) -> Polynomial:
    """Replace each ``P[b]`` of ``f`` by ``Σ_i P[i]·∏_k Z_k[i_k, b_k]``.

    ``Z_k`` is ``target_states[k] × kappa``; symbolic mode uses the variables
    ``z<k+1>[i,j]``, numeric mode takes the matrices from ``z_values``.
    """
    n = len(target_states)
    _check_kappa_vars(f, kappa, n)
    if symbolic:
        estimate = estimate_tilde_terms(f, target_states)
        if estimate > term_guard:
            logger.warning("tilde_guard_exceeded estimate=%s guard=%s", estimate, term_guard)
            raise TermCountGuardError(estimate, term_guard)
    else:
        if z_values is None or len(z_values) != n:
            raise ShapeMismatchError("tilde_missing_z_values")
        for k, (z, l) in enumerate(zip(z_values, target_states)):
            if len(z) != l or any(len(row) != kappa for row in z):
                raise ShapeMismatchError(f"tilde_z_shape_mismatch: axis={k} expected={l}x{kappa}")
    grids = [range(int(l)) for l in target_states]
    linear: Dict[Variable, Polynomial] = {}

    def linear_form(v: Variable) -> Polynomial:
        if v in linear:
            return linear[v]
        terms: Dict[Monomial, Fraction] = {}
        for idx in itertools.product(*grids):
            if symbolic:
                mono = tuple(sorted([(entry(*idx), 1)] + [(zvar(k + 1, i, b), 1) for k, (i, b) in enumerate(zip(idx, v.index))]))
                terms[mono] = Fraction(1)
            else:
                c = Fraction(1)
                for k, (i, b) in enumerate(zip(idx, v.index)):
                    c *= Fraction(z_values[k][i][b])  # type: ignore[index]
                    if not c:
                        break
                if c:
                    terms[((entry(*idx), 1),)] = c
        linear[v] = Polynomial._raw(terms)
        return linear[v]

    out = Polynomial()
    for mono, c in f.items():
        term = Polynomial.constant(c)
        for v, e in mono:
            for _ in range(e):
                term = term * linear_form(v)
        out = out + term
    logger.debug("tilde_expanded symbolic=%s terms=%s", symbolic, len(out))
    return out


def z_coefficients(g: Polynomial) -> Dict[Monomial, Polynomial]:
    """Coefficient polynomials (P-entries only) keyed by z-monomial."""
    buckets: Dict[Monomial, Dict[Monomial, Fraction]] = {}
    for mono, c in g.items():
        p_part, z_part = _split_mono(mono)
        buckets.setdefault(z_part, {})[p_part] = c
    return {z: Polynomial._raw(t) for z, t in sorted(buckets.items())}


def rebuild_from_z(coeffs: Mapping[Monomial, Polynomial]) -> Polynomial:
    out = Polynomial()
    for z_mono, poly in coeffs.items():
        out = out + poly * Polynomial({z_mono: 1})
    return out


# ---------------------------------------------------------------------- evaluation


def _tensor_lookup(p: Tensor, z_values: Optional[Sequence[Sequence[Sequence[Scalar]]]]) -> Callable[[Variable], object]:
    float_mode = p.mode == "float"

    def value_of(v: Variable) -> object:
        if v.kind == "z":
            if z_values is None:
                raise ShapeMismatchError(f"unassigned_z_variable: {v}")
            k, i, j = v.index
            try:
                raw = z_values[k - 1][i][j]
            except IndexError:
                raise ShapeMismatchError(f"z_index_out_of_range: {v}") from None
            return float(raw) if float_mode else Fraction(raw)
        if len(v.index) != p.ndim or any(i < 0 or i >= s for i, s in zip(v.index, p.shape)):
            raise ShapeMismatchError(f"index_out_of_range: {v} shape={p.shape}")
        return p.data[v.index]

    return value_of


def evaluate(f: Polynomial, p: Tensor, z_values: Optional[Sequence[Sequence[Sequence[Scalar]]]] = None) -> object:
    """Value of ``f`` at tensor ``p``: a ``Fraction`` in exact mode, a float otherwise."""
    return f.evaluate_with(_tensor_lookup(p, z_values), as_float=p.mode == "float")


def evaluate_at(f: Polynomial, values: Mapping[Variable, Scalar]) -> Fraction:
    def value_of(v: Variable) -> object:
        try:
            return values[v]
        except KeyError:
            raise ShapeMismatchError(f"unassigned_variable: {v}") from None

    return f.evaluate_with(value_of)  # type: ignore[return-value]


# ---------------------------------------------------------------------- generator sets


@dataclass
class GeneratorSet:
    """Polynomials in the entries of a tensor with ``states`` per axis, each with a source tag.

    Source tags: ``edge:<split>`` for flattening minors, ``tilde:<base id>:<z-monomial>``
    for coefficients of a substituted base polynomial, ``imported`` for supplied sets.
    """

    kappa: int
    states: Tuple[int, ...]
    polys: List[Polynomial] = field(default_factory=list)
    sources: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.states = tuple(int(s) for s in self.states)
        if len(self.sources) < len(self.polys):
            self.sources = list(self.sources) + ["imported"] * (len(self.polys) - len(self.sources))

    @classmethod
    def zero(cls, kappa: int, n: int) -> "GeneratorSet":
        """The base set ``{0}`` for κ×…×κ tensors: imposes nothing."""
        return cls(kappa=kappa, states=(kappa,) * n)

    def __len__(self) -> int:
        return len(self.polys)

    def __iter__(self) -> Iterator[Tuple[Polynomial, str]]:
        return iter(zip(self.polys, self.sources))

    def append(self, poly: Polynomial, source: str) -> None:
        if not poly.is_zero():
            self.polys.append(poly)
            self.sources.append(source)

    def extend(self, other: Iterable[Tuple[Polynomial, str]]) -> None:
        for poly, source in other:
            self.append(poly, source)

    def is_trivial(self) -> bool:
        return all(p.is_zero() for p in self.polys)

    def deduplicated(self) -> "GeneratorSet":
        seen: Dict[tuple, int] = {}
        out = GeneratorSet(self.kappa, self.states)
        for poly, source in self:
            key = poly.canonical_key()
            if key and key not in seen:
                seen[key] = len(out.polys)
                out.polys.append(poly)
                out.sources.append(source)
        return out

    def validate(self) -> None:
        n = len(self.states)
        for idx, poly in enumerate(self.polys):
            for v in poly.variables():
                if v.kind != "P" or len(v.index) != n or any(i < 0 or i >= s for i, s in zip(v.index, self.states)):
                    raise ShapeMismatchError(f"generator_variable_out_of_range: poly={idx} var={v} states={self.states}")

    def source_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for s in self.sources:
            kind = s.split(":", 1)[0]
            counts[kind] = counts.get(kind, 0) + 1
        return counts


def extract_z_coefficients(g: Polynomial, kappa: int, states: Sequence[int], source: str = "tilde") -> GeneratorSet:
    out = GeneratorSet(kappa=kappa, states=tuple(states))
    for z_mono, poly in z_coefficients(g).items():
        tag = "*".join(str(v) if e == 1 else f"{v}^{e}" for v, e in z_mono) or "1"
        out.append(poly, f"{source}:{tag}")
    return out


def random_polynomial_values(rng: np.random.Generator, variables: Iterable[Variable], bound: int = 9) -> Dict[Variable, Fraction]:
    return {v: Fraction(int(rng.integers(-bound, bound + 1))) for v in variables}
