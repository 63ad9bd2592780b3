"""Leaf-labeled unrooted trees: Newick I/O, splits, cherries, pruning, ⋆-join.

Vertex ids are plain integers. ``parse_newick`` numbers leaves ``0..n-1`` in
order of appearance and internal vertices after them; every other operation
keeps the ids of its inputs and only allocates fresh ids above the current
maximum, so parameters keyed by vertex ids survive joins and resolutions.
"""
from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import NewickSyntaxError, TreeValidationError

logger = logging.getLogger("phyloinv.tree")

Edge = Tuple[int, int]
DirectedEdge = Tuple[int, int]

_NEWICK_SPECIAL = set("(),:;[]'")


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Split:
    """Bipartition of the taxa; ``side_a`` holds the order-least taxon."""

    side_a: FrozenSet[str]
    side_b: FrozenSet[str]
    order: Tuple[str, ...] = field(default=(), compare=False, repr=False)

    @classmethod
    def canonical(cls, a: Iterable[str], b: Iterable[str], taxa_order: Sequence[str]) -> "Split":
        side_a, side_b = frozenset(a), frozenset(b)
        if not side_a or not side_b:
            raise TreeValidationError("split_side_empty")
        if side_a & side_b:
            raise TreeValidationError("split_sides_overlap")
        if side_a | side_b != set(taxa_order):
            raise TreeValidationError("split_does_not_cover_taxa")
        first = taxa_order[0]
        if first not in side_a:
            side_a, side_b = side_b, side_a
        return cls(side_a=side_a, side_b=side_b, order=tuple(taxa_order))

    @classmethod
    def parse(cls, text: str, taxa_order: Sequence[str]) -> "Split":
        """Parse ``a1,a2|a3,a4,a5``."""
        if text.count("|") != 1:
            raise TreeValidationError(f"split_syntax: {text!r}")
        left, right = text.split("|")
        a = [s.strip() for s in left.split(",") if s.strip()]
        b = [s.strip() for s in right.split(",") if s.strip()]
        return cls.canonical(a, b, taxa_order)

    def ordered_sides(self) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
        if self.order:
            a = tuple(x for x in self.order if x in self.side_a)
            b = tuple(x for x in self.order if x in self.side_b)
            return a, b
        return tuple(sorted(self.side_a)), tuple(sorted(self.side_b))

    @property
    def is_trivial(self) -> bool:
        return len(self.side_a) == 1 or len(self.side_b) == 1

    def __str__(self) -> str:
        a, b = self.ordered_sides()
        return f"{','.join(a)}|{','.join(b)}"


@dataclass(frozen=True)
class Tripartition:
    """Partition of the taxa induced by deleting an internal vertex (d parts for valency d)."""

    parts: Tuple[FrozenSet[str], ...]
    order: Tuple[str, ...] = field(default=(), compare=False, repr=False)

    def ordered_parts(self) -> Tuple[Tuple[str, ...], ...]:
        rank = {name: i for i, name in enumerate(self.order)}
        return tuple(tuple(sorted(p, key=lambda x: rank.get(x, 0))) for p in self.parts)

    def __str__(self) -> str:
        return "|".join(",".join(p) for p in self.ordered_parts())


@dataclass(frozen=True, eq=False)
class Tree:
    vertices: FrozenSet[int]
    edges: FrozenSet[Edge]
    leaf_labels: Mapping[int, str]
    taxa_order: Tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "leaf_labels", MappingProxyType(dict(self.leaf_labels)))
        object.__setattr__(self, "edges", frozenset(edge_key(u, v) for u, v in self.edges))
        self._validate()

    # ------------------------------------------------------------------ construction

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[Tuple[int, int]],
        leaf_labels: Mapping[int, str],
        taxa_order: Optional[Sequence[str]] = None,
    ) -> "Tree":
        edge_set = frozenset(edge_key(u, v) for u, v in edges)
        vertices = frozenset(itertools.chain.from_iterable(edge_set)) | frozenset(leaf_labels)
        if taxa_order is None:
            taxa_order = [leaf_labels[v] for v in sorted(leaf_labels)]
        return cls(vertices=vertices, edges=edge_set, leaf_labels=leaf_labels, taxa_order=tuple(taxa_order))

    def _validate(self) -> None:
        if not set(self.leaf_labels) <= set(self.vertices):
            raise TreeValidationError("leaf_label_on_unknown_vertex")
        labels = list(self.leaf_labels.values())
        if len(labels) < 2:
            raise TreeValidationError("tree_needs_two_taxa")
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise TreeValidationError(f"duplicate_taxon: {dup[0]}")
        if len(set(self.taxa_order)) != len(self.taxa_order) or set(self.taxa_order) != set(labels):
            raise TreeValidationError("taxa_order_mismatch")
        for u, v in self.edges:
            if u == v:
                raise TreeValidationError(f"self_loop: {u}")
            if u not in self.vertices or v not in self.vertices:
                raise TreeValidationError(f"edge_endpoint_unknown: {u}-{v}")
        if len(self.edges) != len(self.vertices) - 1:
            raise TreeValidationError("not_a_tree: edge count must be vertex count minus one")
        adj = self.adjacency
        start = next(iter(self.vertices))
        seen = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        if len(seen) != len(self.vertices):
            raise TreeValidationError("not_connected")
        for v in self.vertices:
            deg = len(adj[v])
            if v in self.leaf_labels:
                if deg != 1:
                    raise TreeValidationError(f"labeled_vertex_not_leaf: {self.leaf_labels[v]} valency={deg}")
            elif deg < 3:
                raise TreeValidationError(f"internal_vertex_valency: v{v} valency={deg}")

    # ------------------------------------------------------------------ queries

    @cached_property
    def adjacency(self) -> Dict[int, Tuple[int, ...]]:
        adj: Dict[int, List[int]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    @cached_property
    def taxon_index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.taxa_order)}

    @cached_property
    def leaf_vertex(self) -> Dict[str, int]:
        return {name: v for v, name in self.leaf_labels.items()}

    @property
    def n_taxa(self) -> int:
        return len(self.taxa_order)

    @property
    def leaves(self) -> Tuple[int, ...]:
        return tuple(self.leaf_vertex[name] for name in self.taxa_order)

    @property
    def internal_vertices(self) -> Tuple[int, ...]:
        return tuple(sorted(v for v in self.vertices if v not in self.leaf_labels))

    @property
    def is_binary(self) -> bool:
        return all(len(self.adjacency[v]) == 3 for v in self.internal_vertices)

    @property
    def internal_edges(self) -> Tuple[Edge, ...]:
        return tuple(e for e in self.sorted_edges() if e[0] not in self.leaf_labels and e[1] not in self.leaf_labels)

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self.edges

    def is_leaf(self, v: int) -> bool:
        return v in self.leaf_labels

    def vertex_name(self, v: int) -> str:
        if v in self.leaf_labels:
            return self.leaf_labels[v]
        return f"v{v}"

    def vertex_by_name(self, name: str) -> int:
        name = name.strip()
        if name in self.leaf_vertex:
            return self.leaf_vertex[name]
        if name.startswith("v") and name[1:].isdigit() and int(name[1:]) in self.vertices:
            return int(name[1:])
        raise TreeValidationError(f"unknown_vertex: {name}")

    def component(self, start: int, blocked: Iterable[int] = (), cut: Optional[Edge] = None) -> FrozenSet[int]:
        """Vertices reachable from ``start`` avoiding ``blocked`` vertices and the ``cut`` edge."""
        blocked_set = set(blocked)
        seen = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in self.adjacency[x]:
                if y in seen or y in blocked_set:
                    continue
                if cut is not None and edge_key(x, y) == cut:
                    continue
                seen.add(y)
                queue.append(y)
        return frozenset(seen)

    def taxa_of(self, vertices: Iterable[int]) -> List[str]:
        found = [self.leaf_labels[v] for v in vertices if v in self.leaf_labels]
        return sorted(found, key=self.taxon_index.__getitem__)

    def directed_edges(self, root: int) -> List[DirectedEdge]:
        """Edges directed away from ``root`` in breadth-first order."""
        if root not in self.vertices:
            raise TreeValidationError(f"unknown_root: {root}")
        out: List[DirectedEdge] = []
        seen = {root}
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y in self.adjacency[x]:
                if y not in seen:
                    seen.add(y)
                    out.append((x, y))
                    queue.append(y)
        return out

    def path(self, source: int, target: int) -> List[int]:
        parent: Dict[int, int] = {}
        for p, c in self.directed_edges(source):
            parent[c] = p
        out = [target]
        while out[-1] != source:
            out.append(parent[out[-1]])
        return list(reversed(out))

    def splits(self) -> Dict[Edge, Split]:
        return {e: edge_split(self, e) for e in self.sorted_edges()}

    def split_set(self, nontrivial_only: bool = True) -> FrozenSet[Split]:
        return frozenset(s for s in self.splits().values() if not (nontrivial_only and s.is_trivial))

    def __repr__(self) -> str:
        return f"Tree({write_newick(self)!r})"


# ---------------------------------------------------------------------- Newick


class _NewickParser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def error(self, message: str) -> NewickSyntaxError:
        return NewickSyntaxError(message, self.pos)

    def skip(self) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "[":
                end = self.text.find("]", self.pos)
                if end == -1:
                    raise self.error("unterminated comment")
                self.pos = end + 1
            else:
                break

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Tuple[Optional[str], list]:
        node = self.subtree()
        if self.peek() != ";":
            raise self.error("expected ';'")
        self.pos += 1
        if self.peek():
            raise self.error("trailing content after ';'")
        return node

    def subtree(self) -> Tuple[Optional[str], list]:
        children: list = []
        if self.peek() == "(":
            self.pos += 1
            children.append(self.subtree())
            while self.peek() == ",":
                self.pos += 1
                children.append(self.subtree())
            if self.peek() != ")":
                raise self.error("expected ',' or ')'")
            self.pos += 1
        name = self.label()
        self.length()
        if not children and not name:
            raise self.error("unnamed leaf")
        # Internal node labels (support values) are discarded.
        return (name if not children else None, children)

    def label(self) -> Optional[str]:
        ch = self.peek()
        if ch == "'":
            self.pos += 1
            buf: List[str] = []
            while True:
                if self.pos >= len(self.text):
                    raise self.error("unterminated quoted label")
                c = self.text[self.pos]
                if c == "'":
                    if self.text[self.pos + 1 : self.pos + 2] == "'":
                        buf.append("'")
                        self.pos += 2
                        continue
                    self.pos += 1
                    break
                buf.append(c)
                self.pos += 1
            return "".join(buf)
        start = self.pos
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in _NEWICK_SPECIAL or c.isspace():
                break
            self.pos += 1
        raw = self.text[start : self.pos]
        return raw or None

    def length(self) -> None:
        if self.peek() != ":":
            return
        self.pos += 1
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos] in "+-.eE" or self.text[self.pos].isdigit()):
            self.pos += 1
        raw = self.text[start : self.pos]
        try:
            float(raw)
        except ValueError:
            raise self.error(f"bad branch length {raw!r}") from None


def parse_newick(text: str) -> Tree:
    """Parse Newick with named leaves. Branch lengths, comments and internal labels are discarded.

    A root of valency 2 is suppressed (rooted Newick → unrooted tree); any other
    internal vertex of valency 2 is rejected.
    """
    root = _NewickParser(text.strip()).parse()
    leaf_names: List[str] = []

    def collect(node: Tuple[Optional[str], list]) -> None:
        name, children = node
        if not children:
            leaf_names.append(str(name))
        for child in children:
            collect(child)

    collect(root)
    if len(set(leaf_names)) != len(leaf_names):
        dup = next(x for x in leaf_names if leaf_names.count(x) > 1)
        raise TreeValidationError(f"duplicate_taxon: {dup}")
    if len(leaf_names) < 2:
        raise TreeValidationError("tree_needs_two_taxa")

    leaf_ids = {name: i for i, name in enumerate(leaf_names)}
    next_internal = itertools.count(len(leaf_names))
    edges: List[Edge] = []

    def build(node: Tuple[Optional[str], list], is_root: bool) -> int:
        name, children = node
        if not children:
            return leaf_ids[str(name)]
        if len(children) == 1:
            raise TreeValidationError("internal_vertex_valency: valency 2 after parse")
        if is_root and len(children) == 2:
            left = build(children[0], False)
            right = build(children[1], False)
            edges.append((left, right))
            return left
        vid = next(next_internal)
        for child in children:
            edges.append((vid, build(child, False)))
        return vid

    build(root, True)
    labels = {i: name for name, i in leaf_ids.items()}
    tree = Tree.from_edges(edges, labels, leaf_names)
    logger.debug("newick_parsed taxa=%s internal=%s", tree.n_taxa, len(tree.internal_vertices))
    return tree


def _quote(name: str) -> str:
    if any(c in _NEWICK_SPECIAL or c.isspace() for c in name):
        return "'" + name.replace("'", "''") + "'"
    return name


def write_newick(t: Tree) -> str:
    """Canonical Newick: rooted at the neighbor of the first taxon, children sorted by least taxon."""
    idx = t.taxon_index
    if t.n_taxa == 2 and not t.internal_vertices:
        return "(" + ",".join(_quote(x) for x in t.taxa_order) + ");"

    least: Dict[Tuple[int, int], int] = {}

    def min_taxon(v: int, parent: int) -> int:
        key = (v, parent)
        if key not in least:
            if v in t.leaf_labels:
                least[key] = idx[t.leaf_labels[v]]
            else:
                least[key] = min(min_taxon(c, v) for c in t.adjacency[v] if c != parent)
        return least[key]

    def render(v: int, parent: int) -> str:
        if v in t.leaf_labels:
            return _quote(t.leaf_labels[v])
        kids = sorted((c for c in t.adjacency[v] if c != parent), key=lambda c: min_taxon(c, v))
        return "(" + ",".join(render(c, v) for c in kids) + ")"

    root = t.adjacency[t.leaf_vertex[t.taxa_order[0]]][0]
    kids = sorted(t.adjacency[root], key=lambda c: min_taxon(c, root))
    return "(" + ",".join(render(c, root) for c in kids) + ");"


# ---------------------------------------------------------------------- operations


def edge_split(t: Tree, e: Tuple[int, int]) -> Split:
    key = edge_key(*e)
    if key not in t.edges:
        raise TreeValidationError(f"edge_not_in_tree: {e[0]}-{e[1]}")
    side = t.component(key[0], cut=key)
    a = t.taxa_of(side)
    b = [x for x in t.taxa_order if x not in set(a)]
    return Split.canonical(a, b, t.taxa_order)


def vertex_tripartition(t: Tree, v: int) -> Tripartition:
    if v not in t.vertices:
        raise TreeValidationError(f"unknown_vertex: {v}")
    if t.is_leaf(v):
        raise TreeValidationError(f"vertex_is_leaf: {t.leaf_labels[v]}")
    idx = t.taxon_index
    parts = [frozenset(t.taxa_of(t.component(u, blocked=[v]))) for u in t.adjacency[v]]
    parts.sort(key=lambda p: min(idx[x] for x in p))
    return Tripartition(parts=tuple(parts), order=t.taxa_order)


def find_cherries(t: Tree) -> List[Tuple[str, str]]:
    if t.n_taxa < 3:
        raise TreeValidationError("cherries_need_three_taxa")
    idx = t.taxon_index
    out: List[Tuple[str, str]] = []
    for v in t.internal_vertices:
        names = sorted((t.leaf_labels[u] for u in t.adjacency[v] if t.is_leaf(u)), key=idx.__getitem__)
        out.extend(itertools.combinations(names, 2))
    out.sort(key=lambda pair: (idx[pair[0]], idx[pair[1]]))
    if t.is_binary and len(out) < 2:
        raise TreeValidationError("binary_tree_with_fewer_than_two_cherries")
    return out


def _cherry_vertex(t: Tree, cherry: Tuple[str, str]) -> Tuple[int, int, int]:
    a, b = cherry
    if a == b or a not in t.leaf_vertex or b not in t.leaf_vertex:
        raise TreeValidationError(f"not_a_cherry: {a},{b}")
    va, vb = t.leaf_vertex[a], t.leaf_vertex[b]
    wa, wb = t.adjacency[va][0], t.adjacency[vb][0]
    if wa != wb or t.is_leaf(wa):
        raise TreeValidationError(f"not_a_cherry: {a},{b}")
    return va, vb, wa


def prune_cherry(t: Tree, cherry: Tuple[str, str], new_taxon: str) -> Tree:
    """Delete a cherry; its common vertex becomes the leaf ``new_taxon``.

    At a vertex of valency > 3 the two leaves are replaced by a single new leaf
    hanging from that vertex instead.
    """
    va, vb, w = _cherry_vertex(t, cherry)
    if new_taxon in t.leaf_vertex:
        raise TreeValidationError(f"taxon_name_collision: {new_taxon}")
    edges = set(t.edges) - {edge_key(va, w), edge_key(vb, w)}
    labels = {v: n for v, n in t.leaf_labels.items() if v not in (va, vb)}
    if len(t.adjacency[w]) == 3:
        labels[w] = new_taxon
    else:
        fresh = max(t.vertices) + 1
        edges.add(edge_key(w, fresh))
        labels[fresh] = new_taxon
    first = min(cherry, key=t.taxon_index.__getitem__)
    order = [new_taxon if x == first else x for x in t.taxa_order if x not in cherry or x == first]
    return Tree.from_edges(edges, labels, order)


def star_join(t1: Tree, t2: Tree, leaf1: str, leaf2: str) -> Tuple[Tree, Edge]:
    """Identify ``leaf1`` of ``t1`` with ``leaf2`` of ``t2`` and conjoin their edges.

    The taxa of ``t2`` (minus ``leaf2``) take ``leaf1``'s place in the taxa order.
    Returns the joined tree and the conjoined edge.
    """
    if leaf1 not in t1.leaf_vertex:
        raise TreeValidationError(f"join_leaf_not_in_tree: {leaf1}")
    if leaf2 not in t2.leaf_vertex:
        raise TreeValidationError(f"join_leaf_not_in_tree: {leaf2}")
    rest1 = [x for x in t1.taxa_order if x != leaf1]
    rest2 = [x for x in t2.taxa_order if x != leaf2]
    clash = set(rest1) & set(rest2)
    if clash:
        raise TreeValidationError(f"taxon_name_clash: {sorted(clash)[0]}")
    offset = max(t1.vertices) + 1
    x1 = t1.leaf_vertex[leaf1]
    u1 = t1.adjacency[x1][0]
    x2 = t2.leaf_vertex[leaf2] + offset
    u2 = t2.adjacency[t2.leaf_vertex[leaf2]][0] + offset
    edges = {e for e in t1.edges if x1 not in e}
    edges |= {edge_key(a + offset, b + offset) for a, b in t2.edges if x2 not in (a + offset, b + offset)}
    conjoined = edge_key(u1, u2)
    edges.add(conjoined)
    labels = {v: n for v, n in t1.leaf_labels.items() if v != x1}
    labels.update({v + offset: n for v, n in t2.leaf_labels.items() if n != leaf2})
    order: List[str] = []
    for x in t1.taxa_order:
        order.extend(rest2 if x == leaf1 else [x])
    return Tree.from_edges(edges, labels, order), conjoined


def split_at_edge(t: Tree, e: Tuple[int, int], joint_taxon: str) -> Tuple[Tree, Tree, Split]:
    """Cut ``t`` on edge ``e`` into T′ (side holding the first taxon) and T″.

    Both halves get a new leaf named ``joint_taxon`` standing in for the other
    half; ``star_join(T′, T″, joint_taxon, joint_taxon)`` recovers ``t`` up to
    taxa order.
    """
    key = edge_key(*e)
    split = edge_split(t, key)
    if joint_taxon in t.leaf_vertex:
        raise TreeValidationError(f"taxon_name_collision: {joint_taxon}")
    first_side = t.component(key[0], cut=key)
    ua, ub = key if set(t.taxa_of(first_side)) == set(split.side_a) else (key[1], key[0])
    fresh = max(t.vertices) + 1
    halves: List[Tree] = []
    for anchor, side_taxa, joint_first in ((ua, split.side_a, False), (ub, split.side_b, True)):
        comp = t.component(anchor, cut=key)
        edges = {x for x in t.edges if x[0] in comp and x[1] in comp}
        edges.add(edge_key(anchor, fresh))
        labels = {v: n for v, n in t.leaf_labels.items() if v in comp}
        labels[fresh] = joint_taxon
        names = [x for x in t.taxa_order if x in side_taxa]
        order = [joint_taxon, *names] if joint_first else [*names, joint_taxon]
        halves.append(Tree.from_edges(edges, labels, order))
    return halves[0], halves[1], split


def resolve_binary(t: Tree, seed: Optional[int] = None) -> Tuple[Tree, List[Edge]]:
    """Caterpillar-resolve every vertex of valency > 3.

    Neighbors are ordered by the least taxon behind them; a non-None ``seed``
    shuffles that order deterministically. Returns the binary tree and the new
    edges whose contraction gives back ``t``.
    """
    if t.is_binary:
        return t, []
    rng = np.random.default_rng(seed) if seed is not None else None
    idx = t.taxon_index
    edges = set(t.edges)
    next_id = max(t.vertices) + 1
    collapsed: List[Edge] = []
    # (u, v) -> vertex now standing in for v at u's end of the original edge u-v
    holder: Dict[Tuple[int, int], int] = {}
    for v in t.internal_vertices:
        nbrs = list(t.adjacency[v])
        if len(nbrs) <= 3:
            continue
        nbrs.sort(key=lambda u: min(idx[x] for x in t.taxa_of(t.component(u, blocked=[v]))))
        if rng is not None:
            nbrs = [nbrs[i] for i in rng.permutation(len(nbrs))]
        ends = [holder.get((v, u), u) for u in nbrs]
        for end in ends[2:]:
            edges.discard(edge_key(v, end))
        prev = v
        chain = len(nbrs) - 3
        for i in range(1, chain + 1):
            c = next_id
            next_id += 1
            edges.add(edge_key(prev, c))
            collapsed.append(edge_key(prev, c))
            edges.add(edge_key(c, ends[i + 1]))
            holder[(nbrs[i + 1], v)] = c
            prev = c
        edges.add(edge_key(prev, ends[-1]))
        holder[(nbrs[-1], v)] = prev
    resolved = Tree.from_edges(edges, dict(t.leaf_labels), t.taxa_order)
    logger.debug("resolve_binary collapsed=%s", len(collapsed))
    return resolved, collapsed


def contraction_map(t: Tree, edges: Iterable[Tuple[int, int]]) -> Dict[int, int]:
    """Map each vertex to the representative (least id) of its contracted group."""
    parent = {v: v for v in t.vertices}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        if edge_key(u, v) not in t.edges:
            raise TreeValidationError(f"edge_not_in_tree: {u}-{v}")
        if t.is_leaf(u) or t.is_leaf(v):
            raise TreeValidationError("cannot_contract_pendant_edge")
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    return {v: find(v) for v in t.vertices}


def contract_edges(t: Tree, edges: Iterable[Tuple[int, int]]) -> Tree:
    rep = contraction_map(t, edges)
    new_edges = {edge_key(rep[u], rep[v]) for u, v in t.edges if rep[u] != rep[v]}
    return Tree.from_edges(new_edges, dict(t.leaf_labels), t.taxa_order)


def star_tree(taxa: Sequence[str]) -> Tree:
    """Star tree with one center vertex (or the single-edge tree for two taxa)."""
    n = len(taxa)
    if n == 2:
        return Tree.from_edges([(0, 1)], {0: taxa[0], 1: taxa[1]}, taxa)
    return Tree.from_edges([(i, n) for i in range(n)], {i: x for i, x in enumerate(taxa)}, taxa)


def is_isomorphic(t1: Tree, t2: Tree) -> bool:
    """Leaf-labeled isomorphism: same taxa and the same nontrivial splits."""
    if set(t1.taxa_order) != set(t2.taxa_order):
        return False
    return t1.split_set() == t2.split_set()


def quartet_splits(taxa: Sequence[str]) -> List[Split]:
    if len(taxa) != 4:
        raise TreeValidationError("quartet_needs_four_taxa")
    a, b, c, d = taxa
    return [
        Split.canonical({a, b}, {c, d}, taxa),
        Split.canonical({a, c}, {b, d}, taxa),
        Split.canonical({a, d}, {b, c}, taxa),
    ]


def all_bipartitions(taxa: Sequence[str]) -> List[Split]:
    """Every 2-block partition of ``taxa`` (2^(n-1) - 1 of them)."""
    first, rest = taxa[0], list(taxa[1:])
    out: List[Split] = []
    for mask in range(2 ** len(rest)):
        a = [first] + [x for i, x in enumerate(rest) if mask >> i & 1]
        b = [x for x in taxa if x not in set(a)]
        if b:
            out.append(Split.canonical(a, b, taxa))
    return out
