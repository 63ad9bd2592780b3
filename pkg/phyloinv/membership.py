"""Membership tests, edge factorizations and split scoring."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from schemas.models import EdgeRank, FactorizationSummary, FactorStep, MembershipReport, ProbeConfig, SplitScore, Verdict, Witness

from . import linalg
from .errors import RankViolationError, ScalarModeError, ShapeMismatchError, TreeValidationError
from .invariants import BaseSets, resolve_base, probe_eval, tree_generators, vertex_layout
from .model import frequencies
from .parallel import parallel_map
from .poly import evaluate
from .tensor import FlatteningSpec, Tensor, flatten, rank_exact, rank_numeric, singular_values, star
from .tree import Edge, Split, Tree, all_bipartitions, edge_key, edge_split, find_cherries, split_at_edge

logger = logging.getLogger("phyloinv.membership")


def align_to_tree(p: Tensor, t: Tree) -> Tensor:
    if set(p.taxa) != set(t.taxa_order) or p.ndim != t.n_taxa:
        raise ShapeMismatchError(f"taxa_mismatch: tensor={list(p.taxa)} tree={list(t.taxa_order)}")
    return p.aligned(t.taxa_order)


def _edge_label(t: Tree, e: Edge) -> str:
    return f"{t.vertex_name(e[0])}-{t.vertex_name(e[1])}"


def _rank_witness(flat: Tensor, kappa: int, label: str, location: str) -> Witness:
    """Nonsingular (κ+1)-minor built from the first Bareiss pivots."""
    if flat.mode != "exact":
        return Witness(kind="rank", generator=label, value=str(rank_numeric(flat)), location=location)
    rows = flat.rows()
    info = linalg.bareiss_echelon(rows)  # type: ignore[arg-type]
    r_idx = sorted(info.pivot_rows[: kappa + 1])
    c_idx = sorted(info.pivot_cols[: kappa + 1])
    det = linalg.determinant([[rows[i][j] for j in c_idx] for i in r_idx])  # type: ignore[misc]
    return Witness(kind="rank", generator=label, value=str(det), location=location, rows=r_idx, cols=c_idx)


def _flattening_rank(flat: Tensor, tol: float) -> int:
    return rank_exact(flat) if flat.mode == "exact" else rank_numeric(flat, tol)


def edge_ranks(p: Tensor, t: Tree, kappa: int, tol: float = 1e-9, threads: int = 1) -> List[Tuple[EdgeRank, Optional[Witness]]]:
    p = align_to_tree(p, t)

    def check(e: Edge) -> Tuple[EdgeRank, Optional[Witness]]:
        split = edge_split(t, e)
        flat = flatten(p, FlatteningSpec.from_split(split))
        r = _flattening_rank(flat, tol)
        label = _edge_label(t, e)
        info = EdgeRank(edge=label, split=str(split), rank=r, rows=flat.shape[0], cols=flat.shape[1], within_bound=r <= kappa)
        witness = None if r <= kappa else _rank_witness(flat, kappa, f"flattening:{split}", label)
        return info, witness

    return parallel_map(check, t.sorted_edges(), threads)


def edge_rank_test(
    p: Tensor, t: Tree, kappa: int, tol: float = 1e-9, threads: int = 1, witness_limit: int = 5
) -> MembershipReport:
    """Accept iff every edge flattening has rank at most κ."""
    results = edge_ranks(p, t, kappa, tol, threads)
    witnesses = [w for _, w in results if w is not None]
    verdict = Verdict.reject if witnesses else Verdict.accept
    notes = []
    if not t.is_binary:
        notes.append("non_binary_tree: verdict is set-theoretic for the edge flattenings only")
    if p.mode == "float":
        notes.append(f"float_mode: numeric ranks with tol={tol}")
    if verdict == Verdict.reject:
        logger.info("edge_rank_reject taxa=%s kappa=%s violations=%s", t.n_taxa, kappa, len(witnesses))
    return MembershipReport(
        verdict=verdict,
        kappa=kappa,
        taxa=list(t.taxa_order),
        mode="edge-rank",
        edge_ranks=[info for info, _ in results],
        witnesses=witnesses[:witness_limit],
        notes=notes,
    )


def _required_bases(t: Tree, kappa: int, base3: BaseSets) -> None:
    for v in t.internal_vertices:
        resolve_base(base3, kappa, len(t.adjacency[v]))


def default_membership_mode(kappa: int) -> str:
    """``exact`` for κ ≤ 2, ``probe`` otherwise."""
    return "exact" if kappa <= 2 else "probe"


def membership(
    p: Tensor,
    t: Tree,
    kappa: int,
    base3: BaseSets = None,
    mode: Optional[str] = None,
    cfg: Optional[ProbeConfig] = None,
    term_guard: int = 10_000_000,
    max_order: int = 5,
    threads: int = 1,
    witness_limit: int = 5,
) -> MembershipReport:
    """Zero-set membership for the tree-wide generator set.

    Edge flattenings are checked first in every mode; a rank above κ is an exact
    nonzero minor of the generator set and rejects without further work.
    ``exact`` then evaluates every generator of ``tree_generators`` built on the
    tensor's own state counts. ``probe`` checks vertex-flattening ranks and
    evaluates each vertex's base set at random pull-backs; passing in probe mode
    is only a probabilistic accept. ``mode=None`` picks ``default_membership_mode``.
    """
    p = align_to_tree(p, t)
    mode = mode or default_membership_mode(kappa)
    if mode not in ("exact", "probe"):
        raise ShapeMismatchError(f"unknown_membership_mode: {mode}")
    cfg = cfg or ProbeConfig()
    ranks = edge_ranks(p, t, kappa, cfg.tol, threads)
    report_ranks = [info for info, _ in ranks]
    witnesses: List[Witness] = [w for _, w in ranks if w is not None]
    notes: List[str] = []
    if not t.is_binary:
        notes.append("non_binary_tree: ideal-level question open; zero-set verdict only")
    if p.mode == "float":
        notes.append(
            f"float_mode: generator values compared with tol={cfg.tol}"
            if mode == "exact"
            else "float_mode: probe nonzeros are not exact certificates"
        )
    if witnesses:
        logger.info("membership_reject mode=%s edge_rank_witnesses=%s", mode, len(witnesses))
        return MembershipReport(
            verdict=Verdict.reject,
            kappa=kappa,
            taxa=list(t.taxa_order),
            mode=mode,
            edge_ranks=report_ranks,
            witnesses=witnesses[:witness_limit],
            notes=notes + ["edge_rank_violation: remaining generators not evaluated"],
        )
    _required_bases(t, kappa, base3)
    if mode == "exact":
        gens = tree_generators(t, kappa, base3, "symbolic", term_guard, max_order, states=p.shape)

        def value_of(item: Tuple[object, str]) -> Tuple[str, object]:
            poly, source = item
            return source, evaluate(poly, p)  # type: ignore[arg-type]

        for source, value in parallel_map(value_of, list(gens), threads):
            nonzero = value != 0 if p.mode == "exact" else abs(float(value)) > cfg.tol  # type: ignore[arg-type]
            if nonzero:
                witnesses.append(Witness(kind="generator", generator=source, value=str(value), location=source.split(":", 2)[1]))
        verdict = Verdict.reject if witnesses else Verdict.accept
        if witnesses:
            logger.info("membership_reject mode=exact witnesses=%s", len(witnesses))
        return MembershipReport(
            verdict=verdict,
            kappa=kappa,
            taxa=list(t.taxa_order),
            mode="exact",
            edge_ranks=report_ranks,
            witnesses=witnesses[:witness_limit],
            generators_checked=len(gens),
            notes=notes,
        )

    probes = []
    for v in t.internal_vertices:
        layout, sizes = vertex_layout(t, v, kappa, p.shape)
        location = f"v{v}"
        q = flatten(p, FlatteningSpec(blocks=layout.blocks))
        q = Tensor(tuple((f"b{i + 1}", s) for i, s in enumerate(sizes)), q.data, q.mode)
        if len(sizes) > 3:
            for split in all_bipartitions(q.taxa):
                flat = flatten(q, FlatteningSpec.from_split(split))
                if _flattening_rank(flat, cfg.tol) > kappa:
                    witnesses.append(_rank_witness(flat, kappa, f"vertex_flattening:{split}", location))
                    break
        base = resolve_base(base3, kappa, len(sizes))
        if witnesses:
            break
        if base.is_trivial():
            continue
        report = probe_eval(base, q, cfg, location=location, threads=threads)
        probes.append(report)
        if report.first_nonzero is not None:
            witnesses.append(report.first_nonzero)
            break
    verdict = Verdict.reject if witnesses else Verdict.probabilistic_accept
    if not witnesses:
        notes.append(f"probabilistic: trials={cfg.trials} z_entry_range={cfg.z_entry_range} seed={cfg.seed}")
    return MembershipReport(
        verdict=verdict,
        kappa=kappa,
        taxa=list(t.taxa_order),
        mode="probe",
        edge_ranks=report_ranks,
        witnesses=witnesses[:witness_limit],
        probes=probes,
        notes=notes,
    )


# ---------------------------------------------------------------------- factorizations


@dataclass
class EdgeFactorization:
    """``p = Q ⋆ R`` across one edge; Q lives on T′, R on T″."""

    q: Tensor
    r: Tensor
    inner_rank: int
    split: Split
    edge: Edge
    shared_axis: str
    left_tree: Tree
    right_tree: Tree

    def recompose(self) -> Tensor:
        return star(self.q, self.r, p_idx=self.shared_axis, q_idx=self.shared_axis)


def _object(rows: Sequence[Sequence[Fraction]], shape: Tuple[int, int]) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(Fraction(0))
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            out[i, j] = x
    return out


def decompose_edge(p: Tensor, t: Tree, e: Tuple[int, int], kappa: int, shared_axis: Optional[str] = None) -> EdgeFactorization:
    """Exact rank factorization of the flattening on ``e``, padded to κ on the shared axis.

    Q carries the left factor with zero columns appended; R carries the reduced
    row echelon rows followed by standard basis rows on non-pivot columns.
    """
    p = align_to_tree(p, t)
    if p.mode != "exact":
        raise ScalarModeError("decompose_needs_exact_mode")
    key = edge_key(*e)
    shared_axis = shared_axis or f"<{t.vertex_name(key[0])}-{t.vertex_name(key[1])}>"
    left_tree, right_tree, split = split_at_edge(t, key, shared_axis)
    flat = flatten(p, FlatteningSpec.from_split(split))
    n_rows, n_cols = flat.shape
    fact = linalg.rank_factorization(flat.rows())  # type: ignore[arg-type]
    l = len(fact.pivot_cols)
    if l > kappa:
        logger.info("decompose_reject edge=%s rank=%s kappa=%s", _edge_label(t, key), l, kappa)
        raise RankViolationError(f"rank_violation: edge={_edge_label(t, key)} rank={l} kappa={kappa}", l)
    right = [list(r) for r in fact.right]
    for c in range(n_cols):
        if len(right) >= kappa:
            break
        if c not in fact.pivot_cols:
            right.append([Fraction(1) if j == c else Fraction(0) for j in range(n_cols)])
    u = _object(fact.left, (n_rows, kappa))
    v = _object(right, (kappa, n_cols))
    side_a, side_b = split.ordered_sides()
    sizes = dict(p.axes)
    q_axes = tuple((x, sizes[x]) for x in side_a) + ((shared_axis, kappa),)
    r_axes = ((shared_axis, kappa),) + tuple((x, sizes[x]) for x in side_b)
    q = Tensor(q_axes, u.reshape([s for _, s in q_axes]), "exact")
    r = Tensor(r_axes, v.reshape([s for _, s in r_axes]), "exact")
    return EdgeFactorization(q, r, l, split, key, shared_axis, left_tree, right_tree)


@dataclass
class FactorPiece:
    tensor: Tensor
    shared_axis: str
    split: str
    edge: str
    inner_rank: int
    tree: Optional[Tree] = None


@dataclass
class Factorization:
    """Cherry-by-cherry factorization; ``core`` is what remains on three taxa."""

    kappa: int
    taxa_order: Tuple[str, ...]
    pieces: List[FactorPiece] = field(default_factory=list)
    core: Optional[Tensor] = None
    core_tree: Optional[Tree] = None

    def recompose(self) -> Tensor:
        if self.core is None:
            raise ShapeMismatchError("factorization_has_no_core")
        out = self.core
        for piece in reversed(self.pieces):
            out = star(out, piece.tensor, p_idx=piece.shared_axis, q_idx=piece.shared_axis)
        return out.aligned(self.taxa_order)

    def summary(self, recomposed_exact: bool = False) -> FactorizationSummary:
        steps = []
        for piece in self.pieces:
            own = [n for n in piece.tensor.taxa if n != piece.shared_axis]
            sides = [s.split(",") for s in piece.split.split("|")] if "|" in piece.split else [own, []]
            other = next((s for s in sides if not set(s) <= set(own)), [])
            steps.append(
                FactorStep(
                    edge=piece.edge,
                    split=piece.split,
                    inner_rank=piece.inner_rank,
                    shared_axis=piece.shared_axis,
                    q_axes=list(piece.tensor.taxa),
                    r_axes=[piece.shared_axis, *other],
                )
            )
        return FactorizationSummary(kappa=self.kappa, taxa=list(self.taxa_order), steps=steps, recomposed_exact=recomposed_exact)


def decompose_full(p: Tensor, t: Tree, kappa: int = 2) -> Factorization:
    """Factor along the edge above the least-taxon cherry until three taxa remain."""
    if not t.is_binary:
        raise TreeValidationError("decompose_full_needs_binary_tree")
    p = align_to_tree(p, t)
    out = Factorization(kappa=kappa, taxa_order=t.taxa_order)
    current, tree = p, t
    step = 0
    while tree.n_taxa > 3:
        a, b = find_cherries(tree)[0]
        va, vb = tree.leaf_vertex[a], tree.leaf_vertex[b]
        w = tree.adjacency[va][0]
        other = next(u for u in tree.adjacency[w] if u not in (va, vb))
        step += 1
        fe = decompose_edge(current, tree, (w, other), kappa, shared_axis=f"<j{step}>")
        if {a, b} <= fe.split.side_b:
            rest, rest_tree, piece = fe.q, fe.left_tree, fe.r
        else:
            rest, rest_tree, piece = fe.r, fe.right_tree, fe.q
        out.pieces.append(
            FactorPiece(
                tree=fe.right_tree if piece is fe.r else fe.left_tree,
                tensor=piece,
                shared_axis=fe.shared_axis,
                split=str(fe.split),
                edge=_edge_label(tree, fe.edge),
                inner_rank=fe.inner_rank,
            )
        )
        current, tree = rest.aligned(rest_tree.taxa_order), rest_tree
    out.core, out.core_tree = current, tree
    logger.debug("decompose_full taxa=%s steps=%s", t.n_taxa, len(out.pieces))
    return out


# ---------------------------------------------------------------------- split scoring


def _max_abs_minor(m: np.ndarray, d: int) -> float:
    rows, cols = m.shape
    best = 0.0
    for r in itertools.combinations(range(rows), d):
        for c in itertools.combinations(range(cols), d):
            best = max(best, abs(float(np.linalg.det(m[np.ix_(r, c)]))))
    return best


def split_support(
    counts: Tensor,
    candidates: Sequence[Split],
    kappa: int,
    mode: str = "float",
    tol: float = 1e-9,
    raw_minors: bool = False,
    threads: int = 1,
) -> List[SplitScore]:
    """Rank candidate splits by ``σ_{κ+1}/σ_1`` of the frequency flattening, smallest first."""
    if counts.size == 0:
        raise ShapeMismatchError("empty_counts")
    if any(float(x) < 0 for x in counts.entries()):
        raise ShapeMismatchError("negative_counts")
    freqs = frequencies(counts)
    if mode == "float":
        freqs = freqs.to_mode("float")

    def score(split: Split) -> SplitScore:
        if set(split.side_a | split.side_b) != set(freqs.taxa):
            raise ShapeMismatchError(f"split_taxa_mismatch: {split}")
        flat = flatten(freqs, FlatteningSpec.from_split(split))
        sv = singular_values(flat)
        r = _flattening_rank(flat, tol)
        if flat.mode == "exact" and r <= kappa:
            value = 0.0
        else:
            value = float(sv[kappa] / sv[0]) if len(sv) > kappa and sv[0] > 0 else 0.0
        raw = None
        if raw_minors:
            raw = _max_abs_minor(np.array(flat.data, dtype=float), kappa + 1) if min(flat.shape) > kappa else 0.0
        return SplitScore(split=str(split), score=value, rank=r, singular_values=[float(s) for s in sv], max_abs_minor=raw)

    scores = parallel_map(score, list(candidates), threads)
    return sorted(scores, key=lambda s: s.score)
