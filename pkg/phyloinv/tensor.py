"""Dense labeled tensors over exact rationals (object arrays of ``Fraction``) or floats."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import linalg
from .errors import ScalarModeError, ShapeMismatchError
from .tree import Split

logger = logging.getLogger("phyloinv.tensor")

ScalarMode = Literal["exact", "float"]
Axis = Tuple[str, int]
AxisRef = Union[int, str]

_to_fraction = np.vectorize(lambda x: x if isinstance(x, Fraction) else Fraction(x), otypes=[object])
_to_float = np.vectorize(float, otypes=[np.float64])


def _coerce(array: np.ndarray, mode: str) -> np.ndarray:
    if mode == "exact":
        arr = np.asarray(array, dtype=object)
        out = _to_fraction(arr) if arr.size else arr.astype(object)
        return np.asarray(out, dtype=object).reshape(arr.shape)
    if mode == "float":
        arr = np.asarray(array)
        if arr.dtype == object:
            return (_to_float(arr) if arr.size else arr.astype(np.float64)).reshape(arr.shape)
        return arr.astype(np.float64)
    raise ScalarModeError(f"unknown_scalar_mode: {mode}")


@dataclass(frozen=True, eq=False)
class Tensor:
    axes: Tuple[Axis, ...]
    data: np.ndarray
    mode: str = "exact"

    def __post_init__(self) -> None:
        axes = tuple((str(name), int(size)) for name, size in self.axes)
        names = [a[0] for a in axes]
        if len(set(names)) != len(names):
            raise ShapeMismatchError(f"duplicate_axis_taxon: {names}")
        shape = tuple(a[1] for a in axes)
        data = _coerce(self.data, self.mode)
        if data.shape != shape:
            raise ShapeMismatchError(f"entry_count_mismatch: axes={shape} data={data.shape}")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "data", data)

    # ------------------------------------------------------------------ constructors

    @classmethod
    def from_array(cls, array: object, taxa: Sequence[str], mode: Optional[str] = None) -> "Tensor":
        arr = np.asarray(array, dtype=object if mode in (None, "exact") else np.float64)
        if mode is None:
            mode = "float" if any(isinstance(x, float) for x in arr.flat) else "exact"
        if arr.ndim != len(taxa):
            raise ShapeMismatchError(f"axis_count_mismatch: taxa={len(taxa)} ndim={arr.ndim}")
        return cls(axes=tuple(zip(taxa, arr.shape)), data=arr, mode=mode)

    @classmethod
    def zeros(cls, axes: Sequence[Axis], mode: str = "exact") -> "Tensor":
        shape = tuple(size for _, size in axes)
        if mode == "exact":
            data = np.empty(shape, dtype=object)
            data.fill(Fraction(0))
        else:
            data = np.zeros(shape)
        return cls(axes=tuple(axes), data=data, mode=mode)

    @classmethod
    def matrix(cls, rows: Sequence[Sequence[object]], names: Tuple[str, str] = ("row", "col"), mode: Optional[str] = None) -> "Tensor":
        return cls.from_array(np.array(rows, dtype=object), names, mode)

    # ------------------------------------------------------------------ queries

    @property
    def taxa(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(size for _, size in self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def axis_index(self, ref: AxisRef) -> int:
        if isinstance(ref, (int, np.integer)):
            k = int(ref)
            if k < 0:
                k += self.ndim
            if not 0 <= k < self.ndim:
                raise ShapeMismatchError(f"axis_out_of_range: {ref}")
            return k
        try:
            return self.taxa.index(ref)
        except ValueError:
            raise ShapeMismatchError(f"unknown_axis: {ref}") from None

    def entries(self) -> Iterator[object]:
        return iter(self.data.reshape(-1))

    def rows(self) -> List[List[object]]:
        if self.ndim != 2:
            raise ShapeMismatchError(f"not_a_matrix: ndim={self.ndim}")
        return [list(r) for r in self.data]

    def to_mode(self, mode: str) -> "Tensor":
        if mode == self.mode:
            return self
        if mode == "exact":
            # floats convert to their exact binary value
            return Tensor(self.axes, np.vectorize(Fraction, otypes=[object])(self.data), "exact")
        return Tensor(self.axes, self.data, mode)

    def transpose(self, order: Sequence[AxisRef]) -> "Tensor":
        perm = [self.axis_index(a) for a in order]
        if sorted(perm) != list(range(self.ndim)):
            raise ShapeMismatchError(f"not_a_permutation: {list(order)}")
        return Tensor(tuple(self.axes[i] for i in perm), self.data.transpose(perm), self.mode)

    def aligned(self, taxa_order: Sequence[str]) -> "Tensor":
        return self.transpose(list(taxa_order))

    def rename(self, mapping: Mapping[str, str]) -> "Tensor":
        return Tensor(tuple((mapping.get(n, n), s) for n, s in self.axes), self.data, self.mode)

    def total(self) -> object:
        if self.mode == "exact":
            return sum(self.entries(), Fraction(0))
        return float(self.data.sum())

    def scale(self, factor: object) -> "Tensor":
        return Tensor(self.axes, self.data * factor, self.mode)

    def equals(self, other: "Tensor") -> bool:
        """Exact equality after aligning axes by taxon name."""
        if set(self.taxa) != set(other.taxa):
            return False
        other = other.aligned(self.taxa)
        if other.shape != self.shape:
            return False
        return bool(np.all(self.data == other.data))

    def __repr__(self) -> str:
        axes = " ".join(f"{n}:{s}" for n, s in self.axes)
        return f"Tensor(axes='{axes}', mode={self.mode})"


def _common_mode(*tensors: Tensor) -> str:
    return "exact" if all(t.mode == "exact" for t in tensors) else "float"


# ---------------------------------------------------------------------- flattenings


@dataclass(frozen=True)
class FlatteningSpec:
    """Ordered partition of a tensor's taxa into blocks."""

    blocks: Tuple[Tuple[str, ...], ...]

    @classmethod
    def from_split(cls, split: Split) -> "FlatteningSpec":
        a, b = split.ordered_sides()
        return cls(blocks=(a, b))

    @classmethod
    def from_parts(cls, parts: Iterable[Iterable[str]]) -> "FlatteningSpec":
        return cls(blocks=tuple(tuple(p) for p in parts))

    def ordered_for(self, taxa: Sequence[str]) -> Tuple[Tuple[str, ...], ...]:
        """Blocks with members in the tensor's axis order; raises unless the blocks partition ``taxa``."""
        members = [x for block in self.blocks for x in block]
        if any(not block for block in self.blocks):
            raise ShapeMismatchError("flattening_block_empty")
        if len(members) != len(set(members)) or set(members) != set(taxa):
            raise ShapeMismatchError(f"flattening_not_partition: blocks={self.blocks} taxa={tuple(taxa)}")
        rank = {name: i for i, name in enumerate(taxa)}
        return tuple(tuple(sorted(block, key=rank.__getitem__)) for block in self.blocks)


class FlatteningLayout:
    """Maps composite block indices back to entry indices of the unflattened tensor."""

    def __init__(self, axes: Sequence[Axis], spec: FlatteningSpec) -> None:
        taxa = [n for n, _ in axes]
        sizes = dict(axes)
        self.axes = tuple(axes)
        self.blocks = spec.ordered_for(taxa)
        self.positions = tuple(tuple(taxa.index(x) for x in block) for block in self.blocks)
        self.block_member_sizes = tuple(tuple(sizes[x] for x in block) for block in self.blocks)
        self.block_sizes = tuple(int(np.prod(s, dtype=np.int64)) for s in self.block_member_sizes)

    @property
    def block_names(self) -> Tuple[str, ...]:
        return tuple("+".join(block) for block in self.blocks)

    def entry_index(self, composite: Sequence[int]) -> Tuple[int, ...]:
        out = [0] * len(self.axes)
        for b, c in enumerate(composite):
            digits = np.unravel_index(int(c), self.block_member_sizes[b])
            for pos, d in zip(self.positions[b], digits):
                out[pos] = int(d)
        return tuple(out)


def flatten(p: Tensor, spec: FlatteningSpec) -> Tensor:
    layout = FlatteningLayout(p.axes, spec)
    perm = [pos for block in layout.positions for pos in block]
    data = p.data.transpose(perm).reshape(layout.block_sizes)
    return Tensor(tuple(zip(layout.block_names, layout.block_sizes)), data, p.mode)


def unflatten(flat: Tensor, spec: FlatteningSpec, axes: Sequence[Axis]) -> Tensor:
    layout = FlatteningLayout(axes, spec)
    if flat.shape != layout.block_sizes:
        raise ShapeMismatchError(f"unflatten_shape_mismatch: {flat.shape} != {layout.block_sizes}")
    perm = [pos for block in layout.positions for pos in block]
    permuted_shape = [axes[i][1] for i in perm]
    inverse = np.argsort(perm)
    data = flat.data.reshape(permuted_shape).transpose(inverse)
    return Tensor(tuple(axes), data, flat.mode)


def flatten_split(p: Tensor, split: Split) -> Tensor:
    return flatten(p, FlatteningSpec.from_split(split))


# ---------------------------------------------------------------------- ⋆ and actions


def star(q: Tensor, r: Tensor, p_idx: AxisRef = -1, q_idx: AxisRef = 0) -> Tensor:
    """Contract axis ``p_idx`` of ``q`` with axis ``q_idx`` of ``r``.

    The remaining axes of ``r`` take the place of the contracted axis of ``q``,
    so the default (last of q, first of r) orders the result as q's axes then r's.
    """
    kp, kq = q.axis_index(p_idx), r.axis_index(q_idx)
    if q.shape[kp] != r.shape[kq]:
        raise ShapeMismatchError(f"star_size_mismatch: {q.shape[kp]} != {r.shape[kq]}")
    q_rest = [a for i, a in enumerate(q.axes) if i != kp]
    r_rest = [a for i, a in enumerate(r.axes) if i != kq]
    names = [n for n, _ in q_rest + r_rest]
    if len(set(names)) != len(names):
        raise ShapeMismatchError(f"star_duplicate_taxa: {sorted({n for n in names if names.count(n) > 1})}")
    mode = _common_mode(q, r)
    qd, rd = q.to_mode(mode).data, r.to_mode(mode).data
    raw = np.tensordot(qd, rd, axes=([kp], [kq]))
    nq = len(q_rest)
    order = list(range(kp)) + list(range(nq, nq + len(r_rest))) + list(range(kp, nq))
    axes = q_rest[:kp] + r_rest + q_rest[kp:]
    return Tensor(tuple(axes), raw.transpose(order), mode)


def act(p: Tensor, k: AxisRef, a: Union[Tensor, Sequence[Sequence[object]], np.ndarray]) -> Tensor:
    """``P ⋆_{k,1} A``: let matrix ``a`` act in index ``k``; the axis keeps its taxon name."""
    kk = p.axis_index(k)
    mat = a if isinstance(a, Tensor) else Tensor.from_array(np.array(a, dtype=object), ("_row", "_col"), p.mode if p.mode == "float" else None)
    if mat.ndim != 2:
        raise ShapeMismatchError(f"act_needs_matrix: ndim={mat.ndim}")
    if mat.shape[0] != p.shape[kk]:
        raise ShapeMismatchError(f"act_dimension_mismatch: axis={p.shape[kk]} rows={mat.shape[0]}")
    mode = _common_mode(p, mat)
    raw = np.tensordot(p.to_mode(mode).data, mat.to_mode(mode).data, axes=([kk], [0]))
    raw = np.moveaxis(raw, -1, kk)
    axes = list(p.axes)
    axes[kk] = (axes[kk][0], mat.shape[1])
    return Tensor(tuple(axes), raw, mode)


def subarray(p: Tensor, keep: Union[Sequence[Optional[Sequence[int]]], Mapping[str, Sequence[int]]]) -> Tensor:
    if isinstance(keep, Mapping):
        per_axis: List[Optional[Sequence[int]]] = [keep.get(name) for name in p.taxa]
    else:
        per_axis = list(keep)
    if len(per_axis) != p.ndim:
        raise ShapeMismatchError(f"subarray_axis_count: {len(per_axis)} != {p.ndim}")
    index: List[List[int]] = []
    for (name, size), sel in zip(p.axes, per_axis):
        chosen = list(range(size)) if sel is None else [int(i) for i in sel]
        if not chosen:
            raise ShapeMismatchError(f"subarray_empty_selection: {name}")
        if any(i < 0 or i >= size for i in chosen):
            raise ShapeMismatchError(f"subarray_index_out_of_range: {name}")
        index.append(chosen)
    data = p.data[np.ix_(*index)]
    axes = tuple((name, len(sel)) for (name, _), sel in zip(p.axes, index))
    return Tensor(axes, data, p.mode)


def selection_matrix(size: int, keep: Sequence[int], mode: str = "exact") -> Tensor:
    """``size × len(keep)`` 0/1 matrix whose action equals ``subarray`` on one axis."""
    data = np.zeros((size, len(keep)), dtype=object if mode == "exact" else np.float64)
    for j, i in enumerate(keep):
        data[i, j] = 1
    return Tensor((("_row", size), ("_col", len(keep))), data, mode)


def outer(vectors: Sequence[Sequence[object]], taxa: Sequence[str], mode: str = "exact") -> Tensor:
    arrays = [_coerce(np.array(v, dtype=object), mode) for v in vectors]
    data = arrays[0]
    for v in arrays[1:]:
        data = np.multiply.outer(data, v)
    return Tensor(tuple(zip(taxa, data.shape)), data, mode)


# ---------------------------------------------------------------------- ranks


def rank_exact(m: Tensor) -> int:
    if m.ndim != 2:
        raise ShapeMismatchError(f"rank_needs_matrix: ndim={m.ndim}")
    if m.mode != "exact":
        raise ScalarModeError("rank_exact_needs_exact_mode")
    return linalg.rank(m.rows())  # type: ignore[arg-type]


def rank_numeric(m: Union[Tensor, np.ndarray], tol: float = 1e-9) -> int:
    arr = m.data if isinstance(m, Tensor) else np.asarray(m)
    arr = _coerce(arr, "float")
    if arr.ndim != 2:
        raise ShapeMismatchError(f"rank_needs_matrix: ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ScalarModeError("non_finite_entries")
    if arr.size == 0:
        return 0
    sv = np.linalg.svd(arr, compute_uv=False)
    if sv[0] <= 0:
        return 0
    return int(np.count_nonzero(sv / sv[0] >= tol))


def singular_values(m: Union[Tensor, np.ndarray]) -> np.ndarray:
    arr = _coerce(m.data if isinstance(m, Tensor) else np.asarray(m), "float")
    if not np.all(np.isfinite(arr)):
        raise ScalarModeError("non_finite_entries")
    return np.linalg.svd(arr, compute_uv=False)


def matrix_rank(m: Tensor, tol: float = 1e-9) -> int:
    """Exact rank for exact tensors, numeric rank otherwise."""
    return rank_exact(m) if m.mode == "exact" else rank_numeric(m, tol)


def axes_dict(p: Tensor) -> Dict[str, int]:
    return dict(p.axes)
