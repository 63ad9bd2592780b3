"""Invariant generation: flattening minors, star-tree sets and tree-wide sets.

Generators are polynomials in the entries ``P[i1,...,in]`` of a tensor whose
axes follow the tree's taxa order.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from schemas.models import ProbeConfig, ProbeReport, ProbeTrial, ScalarMode, Witness

from .errors import BaseSetRequiredError, ShapeMismatchError
from .parallel import parallel_map
from .poly import GeneratorSet, Polynomial, Variable, determinant_poly, entry, evaluate, extract_z_coefficients, substitute_tilde
from .tensor import Axis, FlatteningLayout, FlatteningSpec, Tensor, act, flatten, matrix_rank, subarray
from .tree import Split, Tree, all_bipartitions, edge_split, vertex_tripartition

logger = logging.getLogger("phyloinv.invariants")

StarMode = Literal["symbolic", "skip_tilde"]
FlatteningChoice = Literal["bipartitions", "edges"]
BaseSets = Union[GeneratorSet, Mapping[int, GeneratorSet], None]


# ---------------------------------------------------------------------- minors


def flattening_minors(
    axes: Sequence[Axis],
    split: Split,
    kappa: int,
    max_order: int = 5,
) -> Iterator[Polynomial]:
    """All (κ+1)-minors of the flattening on ``split``, rows and columns ascending."""
    layout = FlatteningLayout(axes, FlatteningSpec.from_split(split))
    n_rows, n_cols = layout.block_sizes
    d = kappa + 1
    if n_rows < d or n_cols < d:
        return

    def entry_var(r: int, c: int) -> Variable:
        return entry(*layout.entry_index((r, c)))

    for rows in itertools.combinations(range(n_rows), d):
        for cols in itertools.combinations(range(n_cols), d):
            yield determinant_poly(rows, cols, entry_var, max_order)


def minor_count(axes: Sequence[Axis], split: Split, kappa: int) -> int:
    layout = FlatteningLayout(axes, FlatteningSpec.from_split(split))
    n_rows, n_cols = layout.block_sizes
    return math.comb(n_rows, kappa + 1) * math.comb(n_cols, kappa + 1)


def tree_axes(t: Tree, kappa: int, states: Optional[Sequence[int]] = None) -> Tuple[Axis, ...]:
    sizes = [kappa] * t.n_taxa if states is None else [int(s) for s in states]
    if len(sizes) != t.n_taxa:
        raise ShapeMismatchError(f"states_count_mismatch: {len(sizes)} != {t.n_taxa}")
    if any(s < 1 for s in sizes):
        raise ShapeMismatchError("states_must_be_positive")
    return tuple(zip(t.taxa_order, sizes))


def iter_edge_invariants(
    t: Tree, kappa: int, states: Optional[Sequence[int]] = None, max_order: int = 5
) -> Iterator[Tuple[Polynomial, str]]:
    axes = tree_axes(t, kappa, states)
    for e in t.sorted_edges():
        split = edge_split(t, e)
        for poly in flattening_minors(axes, split, kappa, max_order):
            yield poly, f"edge:{split}"


def count_edge_invariants(t: Tree, kappa: int, states: Optional[Sequence[int]] = None) -> int:
    axes = tree_axes(t, kappa, states)
    return sum(minor_count(axes, edge_split(t, e), kappa) for e in t.sorted_edges())


def edge_invariants(
    t: Tree,
    kappa: int,
    states: Optional[Sequence[int]] = None,
    cap: Optional[int] = None,
    max_order: int = 5,
) -> GeneratorSet:
    axes = tree_axes(t, kappa, states)
    out = GeneratorSet(kappa=kappa, states=tuple(s for _, s in axes))
    for poly, source in iter_edge_invariants(t, kappa, states, max_order):
        if cap is not None and len(out) >= cap:
            logger.info("minor_cap_reached cap=%s total=%s", cap, count_edge_invariants(t, kappa, states))
            break
        out.append(poly, source)
    if not out.polys:
        logger.info("edge_invariants_empty taxa=%s kappa=%s", t.n_taxa, kappa)
    return out


# ---------------------------------------------------------------------- star trees


def star_axis_names(n: int) -> Tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n))


def star_splits(n: int, flattenings: FlatteningChoice = "bipartitions") -> List[Split]:
    names = star_axis_names(n)
    if flattenings == "bipartitions":
        return all_bipartitions(names)
    if flattenings == "edges":
        if n == 2:
            return [Split.canonical([names[0]], [names[1]], names)]
        return [Split.canonical([x], [y for y in names if y != x], names) for x in names]
    raise ShapeMismatchError(f"unknown_flattening_choice: {flattenings}")


def _check_base(base: GeneratorSet, kappa: int, n: int) -> None:
    if base.kappa != kappa:
        raise ShapeMismatchError(f"base_kappa_mismatch: {base.kappa} != {kappa}")
    if base.states != (kappa,) * n:
        raise ShapeMismatchError(f"base_states_mismatch: {base.states} expected={(kappa,) * n}")
    base.validate()


def star_generators(
    kappa: int,
    states: Sequence[int],
    base: GeneratorSet,
    mode: StarMode = "symbolic",
    flattenings: FlatteningChoice = "bipartitions",
    term_guard: int = 10_000_000,
    max_order: int = 5,
    cap: Optional[int] = None,
) -> GeneratorSet:
    """Generators for the star tree with ``len(states)`` leaves and a κ-state center.

    The result is the union of flattening minors and the z-coefficients of every
    base polynomial pulled back to ``states``. When every state count equals κ
    the base is kept as given.
    """
    states = tuple(int(s) for s in states)
    n = len(states)
    if any(s < kappa for s in states):
        raise ShapeMismatchError(f"states_below_kappa: {states} kappa={kappa}")
    _check_base(base, kappa, n)
    names = star_axis_names(n)
    axes = tuple(zip(names, states))
    out = GeneratorSet(kappa=kappa, states=states)
    for split in star_splits(n, flattenings):
        for poly in flattening_minors(axes, split, kappa, max_order):
            if cap is not None and len(out) >= cap:
                break
            out.append(poly, f"edge:{split}")
    if all(s == kappa for s in states):
        for i, (poly, _) in enumerate(base):
            out.append(poly, f"base:{i}")
    elif mode == "skip_tilde":
        if not base.is_trivial():
            raise BaseSetRequiredError("skip_tilde_requires_zero_base: the base set imposes conditions")
    elif mode == "symbolic":
        for i, (poly, _) in enumerate(base):
            g = substitute_tilde(poly, kappa, states, symbolic=True, term_guard=term_guard)
            out.extend(extract_z_coefficients(g, kappa, states, source=f"tilde:{i}"))
    else:
        raise ShapeMismatchError(f"unknown_star_mode: {mode}")
    result = out.deduplicated()
    logger.debug("star_generators states=%s total=%s", states, len(result))
    return result


# ---------------------------------------------------------------------- trees


def resolve_base(base: BaseSets, kappa: int, valency: int) -> GeneratorSet:
    """Base set for a vertex of the given valency; κ=2 defaults to the zero set."""
    if isinstance(base, GeneratorSet):
        if len(base.states) == valency:
            return base
    elif base is not None and valency in base:
        return base[valency]
    if kappa == 2:
        return GeneratorSet.zero(kappa, valency)
    if kappa == 3 and valency == 3:
        raise BaseSetRequiredError(
            "base_set_required: kappa=3 needs the 27 degree-4 generators for 3x3x3 tensors as a generator-set file"
        )
    if kappa >= 4 and valency == 3:
        raise BaseSetRequiredError(f"base_set_required: no generating set is known for kappa={kappa}; supply one")
    raise BaseSetRequiredError(f"base_set_required: kappa={kappa} valency={valency}")


def vertex_layout(
    t: Tree, v: int, kappa: int, states: Optional[Sequence[int]] = None
) -> Tuple[FlatteningLayout, Tuple[int, ...]]:
    parts = vertex_tripartition(t, v).ordered_parts()
    layout = FlatteningLayout(tree_axes(t, kappa, states), FlatteningSpec(blocks=parts))
    return layout, layout.block_sizes


def tree_generators(
    t: Tree,
    kappa: int,
    base3: BaseSets = None,
    mode: StarMode = "symbolic",
    term_guard: int = 10_000_000,
    max_order: int = 5,
    cap: Optional[int] = None,
    states: Optional[Sequence[int]] = None,
) -> GeneratorSet:
    """Union over internal vertices of the star generators of each vertex flattening.

    Blocks are ordered by their least taxon; block ``i`` plays leaf ``i+1`` of the
    base set. Star variables are mapped back to entries of the full tensor.
    """
    axes = tree_axes(t, kappa, states)
    out = GeneratorSet(kappa=kappa, states=tuple(s for _, s in axes))
    for v in t.internal_vertices:
        layout, sizes = vertex_layout(t, v, kappa, states)
        base = resolve_base(base3, kappa, len(sizes))
        star_mode: StarMode = "skip_tilde" if base.is_trivial() else mode
        local = star_generators(kappa, sizes, base, star_mode, "bipartitions", term_guard, max_order, cap)

        def relabel(var: Variable, layout: FlatteningLayout = layout) -> Variable:
            return entry(*layout.entry_index(var.index))

        for poly, source in local:
            out.append(poly.map_variables(relabel), f"vertex:v{v}:{source}")
    result = out.deduplicated()
    logger.info("tree_generators taxa=%s kappa=%s total=%s", t.n_taxa, kappa, len(result))
    return result


# ---------------------------------------------------------------------- numeric probes


def _is_nonzero(value: object, mode: str, tol: float) -> bool:
    if mode == "exact":
        return value != 0
    return abs(float(value)) > tol  # type: ignore[arg-type]


def _miss_bound(base: GeneratorSet, n: int, cfg: ProbeConfig) -> float:
    if base.is_trivial():
        return 0.0
    degree = n * max(p.degree() for p in base.polys)
    per_trial = min(1.0, degree / (2 * cfg.z_entry_range + 1))
    return per_trial ** cfg.trials


def draw_z(rng: np.random.Generator, target_states: Sequence[int], kappa: int, bound: int) -> List[List[List[int]]]:
    return [[[int(x) for x in row] for row in rng.integers(-bound, bound + 1, size=(l, kappa))] for l in target_states]


def pull_back(p: Tensor, z_values: Sequence[Sequence[Sequence[int]]]) -> Tensor:
    """``P̃``: every axis ``k`` of ``p`` acted on by ``Z_k``."""
    out = p
    for k, z in enumerate(z_values):
        out = act(out, k, z)
    return out


def probe_eval(
    base: GeneratorSet,
    p: Tensor,
    cfg: ProbeConfig,
    target_states: Optional[Sequence[int]] = None,
    location: Optional[str] = None,
    threads: int = 1,
) -> ProbeReport:
    """Evaluate ``base`` at ``p`` pulled back by random integer matrices.

    An exact nonzero is a certificate that ``p`` is outside the zero set of the
    tilde generators; all zeros only bound the chance of a miss.
    """
    kappa = base.kappa
    n = p.ndim
    states = tuple(p.shape) if target_states is None else tuple(int(s) for s in target_states)
    if states != p.shape:
        raise ShapeMismatchError(f"probe_target_states_mismatch: {states} != {p.shape}")
    if any(s < kappa for s in states):
        raise ShapeMismatchError(f"states_below_kappa: {states} kappa={kappa}")
    _check_base(base, kappa, n)
    work = p.to_mode(cfg.mode.value)
    rng = np.random.default_rng(cfg.seed)
    draws = [draw_z(rng, states, kappa, cfg.z_entry_range) for _ in range(cfg.trials)]

    def run(trial: int) -> Tuple[int, List[object]]:
        tilde = pull_back(work, draws[trial])
        return trial, [evaluate(poly, tilde) for poly in base.polys]

    report = ProbeReport(location=location, target_states=list(states), n_generators=len(base), config=cfg)
    for trial, values in parallel_map(run, range(cfg.trials), threads):
        nonzero = [i for i, v in enumerate(values) if _is_nonzero(v, cfg.mode.value, cfg.tol)]
        report.trials.append(ProbeTrial(trial=trial, values=[str(v) for v in values], nonzero=len(nonzero)))
        if nonzero and report.first_nonzero is None:
            i = nonzero[0]
            report.first_nonzero = Witness(
                kind="probe",
                generator=f"{base.sources[i]} trial={trial}",
                value=str(values[i]),
                location=location,
            )
    report.certificate = cfg.mode == ScalarMode.exact and report.first_nonzero is not None
    report.miss_bound = 0.0 if report.first_nonzero is not None else _miss_bound(base, n, cfg)
    logger.debug("probe_done location=%s certificate=%s", location, report.certificate)
    return report


@dataclass
class SubarrayProbeResult:
    """Outcome of checking every κ×…×κ subarray; a pass does not imply membership."""

    checked: int = 0
    failures: List[Tuple[Tuple[Tuple[int, ...], ...], str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def subarray_probe(p: Tensor, kappa: int, base: Optional[GeneratorSet] = None, tol: float = 1e-9) -> SubarrayProbeResult:
    """Check bipartition ranks and the base set on each κ×…×κ subarray of ``p``."""
    if any(s < kappa for s in p.shape):
        raise ShapeMismatchError(f"states_below_kappa: {p.shape} kappa={kappa}")
    if base is not None:
        _check_base(base, kappa, p.ndim)
    splits = all_bipartitions(p.taxa) if p.ndim > 1 else []
    result = SubarrayProbeResult()
    for keep in itertools.product(*(itertools.combinations(range(s), kappa) for s in p.shape)):
        sub = subarray(p, [list(k) for k in keep])
        result.checked += 1
        for split in splits:
            r = matrix_rank(flatten(sub, FlatteningSpec.from_split(split)), tol)
            if r > kappa:
                result.failures.append((keep, f"rank:{split}={r}"))
                break
        else:
            if base is not None:
                for poly, source in base:
                    value = evaluate(poly, sub)
                    if _is_nonzero(value, sub.mode, tol):
                        result.failures.append((keep, f"generator:{source}={value}"))
                        break
    return result
