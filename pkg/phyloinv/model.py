"""General Markov model on trees: stochastic and cone parameterizations.

Edge matrices are keyed by directed edges ``(parent, child)`` pointing away
from the root vertex. Entries are exact ``Fraction`` values held in numpy
object arrays.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Dict, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParamsError, ShapeMismatchError, TreeValidationError
from .parallel import parallel_map
from .tensor import Tensor, star
from .tree import DirectedEdge, Tree, edge_key, find_cherries, prune_cherry, resolve_binary, contraction_map, star_join

logger = logging.getLogger("phyloinv.model")

ParamMode = Literal["stochastic", "general"]


def as_matrix(rows: object) -> np.ndarray:
    arr = np.array(rows, dtype=object)
    if arr.ndim != 2:
        raise ParamsError(f"matrix_not_2d: ndim={arr.ndim}")
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        out[idx] = x if isinstance(x, Fraction) else Fraction(x)
    return out


def as_vector(values: Sequence[object]) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    for i, x in enumerate(values):
        out[i] = x if isinstance(x, Fraction) else Fraction(x)
    return out


def identity(kappa: int) -> np.ndarray:
    return as_matrix(np.eye(kappa, dtype=int))


def _freeze(matrices: Mapping[DirectedEdge, object]) -> Mapping[DirectedEdge, np.ndarray]:
    frozen: Dict[DirectedEdge, np.ndarray] = {}
    for (u, v), m in matrices.items():
        arr = as_matrix(m)
        arr.setflags(write=False)
        frozen[(int(u), int(v))] = arr
    return MappingProxyType(frozen)


def _check_orientation(t: Tree, root: int, keys: Sequence[DirectedEdge], kappa: int, matrices: Mapping[DirectedEdge, np.ndarray]) -> None:
    if root not in t.vertices:
        raise ParamsError(f"unknown_root: {root}")
    expected = set(t.directed_edges(root))
    got = set(keys)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise ParamsError(f"edge_matrices_mismatch: missing={missing[:3]} unexpected={extra[:3]}")
    for e, m in matrices.items():
        if m.shape != (kappa, kappa):
            raise ParamsError(f"kappa_mismatch: edge={e[0]}-{e[1]} shape={m.shape} kappa={kappa}")


@dataclass(frozen=True, eq=False)
class GeneralParams:
    """Arbitrary κ×κ edge matrices; the root only fixes orientation."""

    root: int
    matrices: Mapping[DirectedEdge, np.ndarray]

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrices", _freeze(self.matrices))

    @property
    def kappa(self) -> int:
        first = next(iter(self.matrices.values()), None)
        if first is None:
            raise ParamsError("no_edge_matrices")
        return int(first.shape[0])

    def validate(self, t: Tree) -> None:
        _check_orientation(t, self.root, list(self.matrices), self.kappa, self.matrices)

    def matrix(self, u: int, v: int) -> np.ndarray:
        """Matrix oriented ``u → v``; stored in the other direction it is transposed."""
        if (u, v) in self.matrices:
            return self.matrices[(u, v)]
        if (v, u) in self.matrices:
            return self.matrices[(v, u)].T
        raise ParamsError(f"no_matrix_for_edge: {u}-{v}")

    def reroot(self, t: Tree, new_root: int) -> "GeneralParams":
        return GeneralParams(root=new_root, matrices={(p, c): self.matrix(p, c) for p, c in t.directed_edges(new_root)})

    def scale_edge(self, u: int, v: int, factor: object) -> "GeneralParams":
        key = (u, v) if (u, v) in self.matrices else (v, u)
        if key not in self.matrices:
            raise ParamsError(f"no_matrix_for_edge: {u}-{v}")
        out = dict(self.matrices)
        out[key] = self.matrices[key] * Fraction(factor)  # type: ignore[arg-type]
        return GeneralParams(root=self.root, matrices=out)

    def equals(self, other: "GeneralParams") -> bool:
        if set(map(lambda e: edge_key(*e), self.matrices)) != set(map(lambda e: edge_key(*e), other.matrices)):
            return False
        return all(np.array_equal(m, other.matrix(*e)) for e, m in self.matrices.items())


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Root distribution plus row-stochastic edge matrices."""

    root: int
    pi: np.ndarray
    matrices: Mapping[DirectedEdge, np.ndarray]

    def __post_init__(self) -> None:
        pi = as_vector(list(self.pi))
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "matrices", _freeze(self.matrices))

    @property
    def kappa(self) -> int:
        return int(len(self.pi))

    def stochastic_violations(self) -> List[str]:
        problems: List[str] = []
        if any(x < 0 for x in self.pi) or sum(self.pi, Fraction(0)) != 1:
            problems.append("pi_not_distribution")
        for (u, v), m in sorted(self.matrices.items()):
            for r, row in enumerate(m):
                if any(x < 0 for x in row) or sum(row, Fraction(0)) != 1:
                    problems.append(f"row_not_stochastic: edge={u}-{v} row={r}")
        return problems

    def validate(self, t: Tree, strict: bool = True) -> None:
        _check_orientation(t, self.root, list(self.matrices), self.kappa, self.matrices)
        problems = self.stochastic_violations()
        if problems:
            if strict:
                raise ParamsError(problems[0])
            logger.warning("params_not_stochastic count=%s first=%s", len(problems), problems[0])

    def matrix(self, u: int, v: int) -> np.ndarray:
        try:
            return self.matrices[(u, v)]
        except KeyError:
            raise ParamsError(f"no_matrix_for_edge: {u}-{v}") from None


Params = Union[ModelParams, GeneralParams]


def _validate(t: Tree, params: "Params") -> None:
    if isinstance(params, ModelParams):
        params.validate(t, strict=False)
    else:
        params.validate(t)


# ---------------------------------------------------------------------- joint distributions


def _leaf_order(t: Tree) -> List[int]:
    return [t.leaf_vertex[x] for x in t.taxa_order]


def _exact_tensor(t: Tree, kappa: int, data: np.ndarray) -> Tensor:
    return Tensor(tuple((x, kappa) for x in t.taxa_order), data, "exact")


def _empty(shape: Tuple[int, ...]) -> np.ndarray:
    data = np.empty(shape, dtype=object)
    data.fill(Fraction(0))
    return data


def joint_history(t: Tree, params: Params) -> Tensor:
    """Joint leaf tensor by explicit summation over every state history.

    Exponential in the number of vertices; kept as the reference computation.
    """
    _validate(t, params)
    kappa = params.kappa
    root = params.root
    edges = t.directed_edges(root)
    vertices = sorted(t.vertices)
    pos = {v: i for i, v in enumerate(vertices)}
    leaves = _leaf_order(t)
    pi = params.pi if isinstance(params, ModelParams) else None
    data = _empty((kappa,) * t.n_taxa)
    mats = [(pos[p], pos[c], params.matrix(p, c)) for p, c in edges]
    for history in itertools.product(range(kappa), repeat=len(vertices)):
        w = pi[history[pos[root]]] if pi is not None else Fraction(1)
        for pp, cc, m in mats:
            if not w:
                break
            w = w * m[history[pp], history[cc]]
        if w:
            key = tuple(history[pos[leaf]] for leaf in leaves)
            data[key] = data[key] + w
    logger.debug("joint_history taxa=%s kappa=%s", t.n_taxa, kappa)
    return _exact_tensor(t, kappa, data)


def _transfer_to_resolution(t: Tree, params: Params, seed: Optional[int]) -> Tuple[Tree, Params]:
    resolved, collapsed = resolve_binary(t, seed)
    if not collapsed:
        return t, params
    rep = contraction_map(resolved, collapsed)
    collapsed_set = {edge_key(*e) for e in collapsed}
    kappa = params.kappa
    mats: Dict[DirectedEdge, np.ndarray] = {}
    for p, c in resolved.directed_edges(params.root):
        if edge_key(p, c) in collapsed_set:
            mats[(p, c)] = identity(kappa)
        else:
            mats[(p, c)] = params.matrix(rep[p], rep[c])
    if isinstance(params, ModelParams):
        return resolved, ModelParams(root=params.root, pi=params.pi, matrices=mats)
    return resolved, GeneralParams(root=params.root, matrices=mats)


def joint_inductive(t: Tree, params: Params, cherry_seed: Optional[int] = None) -> Tensor:
    """Joint leaf tensor by repeated cherry reduction.

    Non-binary trees are resolved first with identity matrices on the new
    edges. Cherries are taken least-taxon first; a ``cherry_seed`` picks them
    at random instead, which must not change the result.
    """
    _validate(t, params)
    work, wparams = _transfer_to_resolution(t, params, None)
    rng = np.random.default_rng(cherry_seed) if cherry_seed is not None else None
    pi = wparams.pi if isinstance(wparams, ModelParams) else None
    out = _reduce(work, wparams.root, wparams.matrix, pi, rng)
    logger.debug("joint_inductive taxa=%s kappa=%s", t.n_taxa, wparams.kappa)
    return out.aligned(t.taxa_order)


def _reduce(
    t: Tree,
    root: int,
    matrix_of: Callable[[int, int], np.ndarray],
    pi: Optional[np.ndarray],
    rng: Optional[np.random.Generator],
) -> Tensor:
    if t.n_taxa == 2:
        a, b = t.taxa_order
        va, vb = t.leaf_vertex[a], t.leaf_vertex[b]
        if root == va:
            m = matrix_of(va, vb)
            data = m if pi is None else pi[:, None] * m
        elif root == vb:
            m = matrix_of(vb, va)
            data = (m if pi is None else pi[:, None] * m).T
        else:
            raise TreeValidationError(f"root_not_on_two_taxon_tree: {root}")
        return Tensor(((a, data.shape[0]), (b, data.shape[1])), data, "exact")
    cherries = [
        c for c in find_cherries(t) if root not in (t.leaf_vertex[c[0]], t.leaf_vertex[c[1]])
    ]
    pick = cherries[int(rng.integers(len(cherries)))] if rng is not None else cherries[0]
    va, vb = t.leaf_vertex[pick[0]], t.leaf_vertex[pick[1]]
    w = t.adjacency[va][0]
    stand_in = f"<v{w}>"
    q = _reduce(prune_cherry(t, pick, stand_in), root, matrix_of, pi, rng)
    m1, m2 = matrix_of(w, va), matrix_of(w, vb)
    # K[s, j, k] = M1[s, j] * M2[s, k]
    kernel = m1[:, :, None] * m2[:, None, :]
    k = Tensor(((stand_in, kernel.shape[0]), (pick[0], kernel.shape[1]), (pick[1], kernel.shape[2])), kernel, "exact")
    return star(q, k, p_idx=stand_in, q_idx=0)


def joint(t: Tree, params: Params, method: str = "inductive") -> Tensor:
    if method == "history":
        return joint_history(t, params)
    if method == "inductive":
        return joint_inductive(t, params)
    raise ParamsError(f"unknown_joint_method: {method}")


def psi(t: Tree, params: GeneralParams) -> Tensor:
    return joint_inductive(t, params)


# ---------------------------------------------------------------------- reductions and joins


def stochastic_to_general(params: ModelParams, t: Optional[Tree] = None) -> GeneralParams:
    """Absorb ``diag(π)`` into the least-child edge at the root."""
    if t is not None:
        params.validate(t, strict=False)
    root_edges = sorted(e for e in params.matrices if e[0] == params.root)
    if not root_edges:
        raise ParamsError(f"root_has_no_edges: {params.root}")
    target = root_edges[0]
    mats = dict(params.matrices)
    mats[target] = params.pi[:, None] * params.matrices[target]
    return GeneralParams(root=params.root, matrices=mats)


def reroot_stochastic(t: Tree, params: ModelParams, new_root: int) -> ModelParams:
    """Move the root by Bayes reversal of the edges on the old-to-new root path."""
    params.validate(t, strict=False)
    path = t.path(params.root, new_root)
    kappa = params.kappa
    mats = dict(params.matrices)
    marginal = params.pi
    for p, c in zip(path, path[1:]):
        m = params.matrix(p, c)
        child_marginal = np.array([sum((marginal[s] * m[s, j] for s in range(kappa)), Fraction(0)) for j in range(kappa)], dtype=object)
        rev = np.empty((kappa, kappa), dtype=object)
        for j in range(kappa):
            for s in range(kappa):
                # a zero-probability state may take any stochastic row
                rev[j, s] = marginal[s] * m[s, j] / child_marginal[j] if child_marginal[j] else Fraction(1, kappa)
        del mats[(p, c)]
        mats[(c, p)] = rev
        marginal = child_marginal
    return ModelParams(root=new_root, pi=marginal, matrices=mats)


def star_params(
    t1: Tree, u1: GeneralParams, t2: Tree, u2: GeneralParams, leaf1: str, leaf2: str
) -> Tuple[Tree, GeneralParams]:
    """Join parameters along ``star_join``; the conjoined edge gets the product matrix."""
    if u1.kappa != u2.kappa:
        raise ShapeMismatchError(f"kappa_mismatch: {u1.kappa} != {u2.kappa}")
    u1.validate(t1)
    u2.validate(t2)
    joined, conjoined = star_join(t1, t2, leaf1, leaf2)
    offset = max(t1.vertices) + 1
    x1 = t1.leaf_vertex[leaf1]
    a1 = t1.adjacency[x1][0]
    x2 = t2.leaf_vertex[leaf2]
    b2 = t2.adjacency[x2][0]
    oriented: Dict[DirectedEdge, np.ndarray] = {}
    for e in t1.edges:
        if x1 not in e:
            oriented[e] = u1.matrix(*e)
    for e in t2.edges:
        if x2 not in e:
            oriented[(e[0] + offset, e[1] + offset)] = u2.matrix(*e)
    oriented[(a1, b2 + offset)] = u1.matrix(a1, x1).dot(u2.matrix(x2, b2))
    root = u1.root if u1.root != x1 else a1
    lookup = GeneralParams(root=root, matrices=oriented)
    return joined, lookup.reroot(joined, root)


# ---------------------------------------------------------------------- sampling and simulation


def default_root(t: Tree) -> int:
    internal = t.internal_vertices
    return min(internal) if internal else t.leaf_vertex[t.taxa_order[0]]


def _stochastic_row(rng: np.random.Generator, kappa: int, boost: int = 0, diagonal: Optional[int] = None) -> List[Fraction]:
    raw = [int(x) for x in rng.integers(1, 10, size=kappa)]
    if diagonal is not None:
        raw[diagonal] += boost
    total = sum(raw)
    return [Fraction(x, total) for x in raw]


def sample_params(
    t: Tree,
    kappa: int,
    seed: int,
    mode: ParamMode = "stochastic",
    root: Optional[int] = None,
    diagonal_boost: int = 0,
) -> Params:
    """Deterministic random parameters: normalized positive integers, or integers in [-9, 9]."""
    if kappa < 1:
        raise ParamsError(f"kappa_must_be_positive: {kappa}")
    rng = np.random.default_rng(seed)
    root = default_root(t) if root is None else root
    edges = sorted(t.directed_edges(root))
    if mode == "general":
        mats = {e: [[int(x) for x in row] for row in rng.integers(-9, 10, size=(kappa, kappa))] for e in edges}
        return GeneralParams(root=root, matrices=mats)
    if mode != "stochastic":
        raise ParamsError(f"unknown_param_mode: {mode}")
    pi = _stochastic_row(rng, kappa)
    mats = {e: [_stochastic_row(rng, kappa, diagonal_boost, i) for i in range(kappa)] for e in edges}
    return ModelParams(root=root, pi=pi, matrices=mats)


def sample_mixing_params(
    t: Tree,
    kappa: int,
    seed: int,
    pendant: Tuple[int, int] = (2, 12),
    internal: Tuple[int, int] = (15, 30),
    root: Optional[int] = None,
) -> ModelParams:
    """Stochastic parameters with a controlled amount of change per edge.

    Row ``i`` keeps state ``i`` with probability ``1 - u`` and spreads ``u``
    evenly over the other states; ``u`` is drawn in percent from ``pendant``
    or ``internal`` depending on the edge.
    """
    if kappa < 2:
        raise ParamsError(f"mixing_needs_two_states: {kappa}")
    rng = np.random.default_rng(seed)
    root = default_root(t) if root is None else root
    pi = _stochastic_row(rng, kappa)
    mats: Dict[DirectedEdge, List[List[Fraction]]] = {}
    for p, c in sorted(t.directed_edges(root)):
        lo, hi = pendant if t.is_leaf(p) or t.is_leaf(c) else internal
        rows = []
        for i in range(kappa):
            u = Fraction(int(rng.integers(lo, hi + 1)), 100)
            rows.append([1 - u if j == i else u / (kappa - 1) for j in range(kappa)])
        mats[(p, c)] = rows
    return ModelParams(root=root, pi=pi, matrices=mats)


def identity_params(t: Tree, kappa: int, root: Optional[int] = None, stochastic: bool = True) -> Params:
    root = default_root(t) if root is None else root
    mats = {e: identity(kappa) for e in t.directed_edges(root)}
    if stochastic:
        return ModelParams(root=root, pi=[Fraction(1, kappa)] * kappa, matrices=mats)
    return GeneralParams(root=root, matrices=mats)


def _simulate_chunk(
    t: Tree, params: ModelParams, seed: int, chunk_index: int, sites: int
) -> np.ndarray:
    kappa = params.kappa
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk_index])))
    pi = np.array([float(x) for x in params.pi])
    states: Dict[int, np.ndarray] = {params.root: rng.choice(kappa, size=sites, p=pi / pi.sum())}
    for p, c in t.directed_edges(params.root):
        cum = np.cumsum(np.array(params.matrix(p, c), dtype=float), axis=1)
        u = rng.random(sites)
        drawn = (u[:, None] >= cum[states[p]]).sum(axis=1)
        states[c] = np.minimum(drawn, kappa - 1)
    leaves = _leaf_order(t)
    flat = np.ravel_multi_index(tuple(states[v] for v in leaves), (kappa,) * len(leaves))
    return np.bincount(flat, minlength=kappa ** len(leaves))


def simulate_sequences(
    t: Tree,
    params: ModelParams,
    sites: int,
    seed: int,
    chunk_sites: int = 4096,
    threads: int = 1,
) -> Tensor:
    """Leaf-pattern counts of ``sites`` i.i.d. draws.

    Sites are drawn in chunks of ``chunk_sites``; chunk ``i`` uses its own
    Philox stream seeded by ``(seed, i)``, so counts do not depend on ``threads``.
    """
    if sites <= 0:
        raise ParamsError(f"sites_must_be_positive: {sites}")
    if not isinstance(params, ModelParams):
        raise ParamsError("simulation_needs_stochastic_params")
    params.validate(t)
    n_chunks = -(-sites // chunk_sites)
    sizes = [min(chunk_sites, sites - i * chunk_sites) for i in range(n_chunks)]
    counts = parallel_map(lambda i: _simulate_chunk(t, params, seed, i, sizes[i]), range(n_chunks), threads)
    total = np.sum(counts, axis=0).reshape((params.kappa,) * t.n_taxa)
    logger.info("simulate_done sites=%s chunks=%s seed=%s", sites, n_chunks, seed)
    data = np.empty(total.shape, dtype=object)
    for idx, x in np.ndenumerate(total):
        data[idx] = Fraction(int(x))
    return _exact_tensor(t, params.kappa, data)


def frequencies(counts: Tensor) -> Tensor:
    total = counts.total()
    if not total:
        raise ShapeMismatchError("empty_counts")
    if counts.mode == "exact":
        return counts.scale(Fraction(1) / total)  # type: ignore[operator]
    return counts.scale(1.0 / float(total))  # type: ignore[arg-type]
