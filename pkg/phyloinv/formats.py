"""Text formats for tensors, parameters, generator sets, factorizations and reports.

All formats are line oriented; ``#`` starts a comment line and blank lines are
ignored unless noted. Exact rationals are written ``p/q``.
"""
from __future__ import annotations

import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from .errors import FormatError, PhyloInvError, TreeValidationError
from .membership import FactorPiece, Factorization
from .model import GeneralParams, ModelParams, Params
from .poly import GeneratorSet, Monomial, Polynomial, parse_variable
from .tensor import Tensor
from .tree import Tree, parse_newick

logger = logging.getLogger("phyloinv.formats")

Lines = List[Tuple[int, str]]


def _content_lines(text: str, keep_blank: bool = False) -> Lines:
    out: Lines = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line and not keep_blank:
            continue
        out.append((no, line))
    return out


def _rational(token: str, line: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"bad_rational: {token!r}", line) from None


def _key_value(line: str, key: str, no: int) -> str:
    if not line.startswith(f"{key}:"):
        raise FormatError(f"expected '{key}:'", no)
    return line[len(key) + 1 :].strip()


def format_scalar(x: object) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------------- trees


def read_tree(text: str) -> Tree:
    body = " ".join(line for _, line in _content_lines(text))
    if not body:
        raise FormatError("empty_tree_file")
    return parse_newick(body)


# ---------------------------------------------------------------------- tensors


def write_tensor(p: Tensor, header: Iterable[str] = ()) -> str:
    lines = list(header)
    lines.append("axes: " + " ".join(f"{n}:{s}" for n, s in p.axes))
    lines.append(f"mode: {p.mode}")
    lines.extend(format_scalar(x) for x in p.entries())
    return "\n".join(lines) + "\n"


def _parse_axes(value: str, no: int) -> List[Tuple[str, int]]:
    axes: List[Tuple[str, int]] = []
    for token in value.split():
        name, _, size = token.rpartition(":")
        if not name or not size.isdigit() or int(size) < 1:
            raise FormatError(f"bad_axis: {token!r}", no)
        axes.append((name, int(size)))
    if not axes:
        raise FormatError("no_axes", no)
    return axes


def _tensor_from_lines(lines: Lines) -> Tensor:
    if not lines:
        raise FormatError("empty_tensor")
    no, first = lines[0]
    axes = _parse_axes(_key_value(first, "axes", no), no)
    rest = lines[1:]
    mode = "exact"
    if rest and rest[0][1].startswith("mode:"):
        mode = rest[0][1][5:].strip()
        if mode not in ("exact", "float"):
            raise FormatError(f"bad_mode: {mode}", rest[0][0])
        rest = rest[1:]
    values: List[object] = []
    for no, line in rest:
        for token in line.split():
            if mode == "exact":
                values.append(_rational(token, no))
            else:
                try:
                    values.append(float(token))
                except ValueError:
                    raise FormatError(f"bad_float: {token!r}", no) from None
    expected = int(np.prod([s for _, s in axes]))
    if len(values) != expected:
        last = rest[-1][0] if rest else no
        raise FormatError(f"entry_count_mismatch: expected={expected} got={len(values)}", last)
    data = np.empty(len(values), dtype=object if mode == "exact" else np.float64)
    for i, v in enumerate(values):
        data[i] = v
    try:
        return Tensor(tuple(axes), data.reshape([s for _, s in axes]), mode)
    except PhyloInvError as exc:
        raise FormatError(str(exc), lines[0][0]) from None


def read_tensor(text: str) -> Tensor:
    return _tensor_from_lines(_content_lines(text))


# ---------------------------------------------------------------------- params


def resolve_edge(t: Tree, spec: str, no: Optional[int] = None) -> Tuple[int, int]:
    # vertex names may themselves contain '-', so try every cut point
    for i, ch in enumerate(spec):
        if ch != "-":
            continue
        try:
            return t.vertex_by_name(spec[:i]), t.vertex_by_name(spec[i + 1 :])
        except TreeValidationError:
            continue
    raise FormatError(f"unknown_edge: {spec!r}", no)


def read_params(text: str, t: Tree) -> Params:
    lines = _content_lines(text)
    if not lines:
        raise FormatError("empty_params_file")
    no, first = lines[0]
    try:
        root = t.vertex_by_name(_key_value(first, "root", no))
    except TreeValidationError as exc:
        raise FormatError(str(exc), no) from None
    idx = 1
    pi: Optional[List[Fraction]] = None
    if idx < len(lines) and lines[idx][1].startswith("pi:"):
        pno, pline = lines[idx]
        pi = [_rational(x, pno) for x in pline[3:].split()]
        if not pi:
            raise FormatError("empty_pi", pno)
        idx += 1
    kappa = len(pi) if pi is not None else None
    matrices: Dict[Tuple[int, int], List[List[Fraction]]] = {}
    while idx < len(lines):
        eno, eline = lines[idx]
        if not (eline.startswith("edge ") and eline.endswith(":")):
            raise FormatError(f"expected 'edge u-v:' got {eline!r}", eno)
        edge = resolve_edge(t, eline[5:-1].strip(), eno)
        if edge in matrices:
            raise FormatError(f"duplicate_edge: {eline[5:-1].strip()}", eno)
        idx += 1
        rows: List[List[Fraction]] = []
        while idx < len(lines) and not lines[idx][1].startswith("edge "):
            rno, rline = lines[idx]
            row = [_rational(x, rno) for x in rline.split()]
            if kappa is None:
                kappa = len(row)
            if len(row) != kappa:
                raise FormatError(f"row_length_mismatch: expected={kappa} got={len(row)}", rno)
            rows.append(row)
            idx += 1
        if len(rows) != kappa:
            raise FormatError(f"row_count_mismatch: edge={eline[5:-1].strip()} expected={kappa} got={len(rows)}", eno)
        matrices[edge] = rows
    try:
        params: Params
        if pi is not None:
            params = ModelParams(root=root, pi=pi, matrices=matrices)
            params.validate(t, strict=False)
        else:
            params = GeneralParams(root=root, matrices=matrices)
            params.validate(t)
    except PhyloInvError as exc:
        raise FormatError(str(exc), no) from None
    return params


def write_params(params: Params, t: Tree, header: Iterable[str] = ()) -> str:
    lines = list(header)
    lines.append(f"root: {t.vertex_name(params.root)}")
    if isinstance(params, ModelParams):
        lines.append("pi: " + " ".join(format_scalar(x) for x in params.pi))
    for (u, v) in t.directed_edges(params.root):
        lines.append(f"edge {t.vertex_name(u)}-{t.vertex_name(v)}:")
        for row in params.matrix(u, v):
            lines.append(" ".join(format_scalar(x) for x in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- polynomials


def format_terms(poly: Polynomial) -> List[str]:
    out = []
    for mono, c in poly.items():
        factors = [str(v) if e == 1 else f"{v}^{e}" for v, e in mono]
        out.append("term: " + " ".join([str(c), *factors]))
    return out


def _parse_term(value: str, no: int) -> Tuple[Monomial, Fraction]:
    tokens = value.split()
    if not tokens:
        raise FormatError("empty_term", no)
    coeff = _rational(tokens[0], no)
    mono: Dict = {}
    for token in tokens[1:]:
        name, _, exp = token.partition("^")
        try:
            var = parse_variable(name)
        except FormatError:
            raise FormatError(f"bad_variable: {name!r}", no) from None
        if exp and not exp.isdigit():
            raise FormatError(f"bad_exponent: {token!r}", no)
        mono[var] = mono.get(var, 0) + (int(exp) if exp else 1)
    return tuple(sorted(mono.items())), coeff


def read_generator_set(text: str) -> GeneratorSet:
    lines = _content_lines(text, keep_blank=True)
    body = [(no, line) for no, line in lines if line]
    if len(body) < 2:
        raise FormatError("generator_set_needs_kappa_and_states")
    kno, kline = body[0]
    try:
        kappa = int(_key_value(kline, "kappa", kno))
        sno, sline = body[1]
        states = tuple(int(x) for x in _key_value(sline, "states", sno).split())
    except ValueError as exc:
        raise FormatError(str(exc), kno) from None
    out = GeneratorSet(kappa=kappa, states=states)
    start = next(i for i, (no, _) in enumerate(lines) if no == body[1][0]) + 1
    terms: Dict[Monomial, Fraction] = {}
    source = "imported"
    open_block = False

    def close() -> None:
        if open_block:
            out.append(Polynomial(terms), source)

    for no, line in lines[start:]:
        if not line:
            close()
            terms, source, open_block = {}, "imported", False
        elif line.startswith("source:"):
            close()
            terms, source, open_block = {}, line[7:].strip() or "imported", True
        elif line.startswith("term:"):
            mono, c = _parse_term(line[5:], no)
            terms[mono] = terms.get(mono, Fraction(0)) + c
            open_block = True
        else:
            raise FormatError(f"unexpected_line: {line!r}", no)
    close()
    try:
        out.validate()
    except PhyloInvError as exc:
        raise FormatError(str(exc)) from None
    logger.debug("generator_set_read kappa=%s polys=%s", kappa, len(out))
    return out


def write_generator_set(gs: GeneratorSet, header: Iterable[str] = ()) -> str:
    lines = list(header)
    lines.append(f"kappa: {gs.kappa}")
    lines.append("states: " + " ".join(str(s) for s in gs.states))
    for poly, source in gs:
        lines.append(f"source: {source}")
        lines.extend(format_terms(poly))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- factorizations


def write_factorization(f: Factorization, header: Iterable[str] = ()) -> str:
    if f.core is None:
        raise FormatError("factorization_has_no_core")
    lines = list(header)
    lines.append(f"kappa: {f.kappa}")
    lines.append("taxa: " + " ".join(f.taxa_order))
    lines.append("core:")
    lines.append(write_tensor(f.core).rstrip("\n"))
    for piece in f.pieces:
        lines.append(f"piece: {piece.shared_axis} edge={piece.edge} split={piece.split} rank={piece.inner_rank}")
        lines.append(write_tensor(piece.tensor).rstrip("\n"))
    return "\n".join(lines) + "\n"


def read_factorization(text: str) -> Factorization:
    lines = _content_lines(text)
    if len(lines) < 3:
        raise FormatError("factorization_too_short")
    kno, kline = lines[0]
    try:
        kappa = int(_key_value(kline, "kappa", kno))
    except ValueError:
        raise FormatError("bad_kappa", kno) from None
    tno, tline = lines[1]
    taxa = tuple(_key_value(tline, "taxa", tno).split())
    out = Factorization(kappa=kappa, taxa_order=taxa)
    sections: List[Tuple[Tuple[int, str], Lines]] = []
    for no, line in lines[2:]:
        if line == "core:" or line.startswith("piece:"):
            sections.append(((no, line), []))
        elif not sections:
            raise FormatError(f"unexpected_line: {line!r}", no)
        else:
            sections[-1][1].append((no, line))
    for (no, head), body in sections:
        tensor = _tensor_from_lines(body)
        if head == "core:":
            out.core = tensor
            continue
        fields = head[6:].split()
        if not fields:
            raise FormatError("piece_without_shared_axis", no)
        meta = dict(item.split("=", 1) for item in fields[1:] if "=" in item)
        try:
            rank = int(meta.get("rank", "0"))
        except ValueError:
            raise FormatError("bad_rank", no) from None
        out.pieces.append(
            FactorPiece(tensor=tensor, shared_axis=fields[0], split=meta.get("split", ""), edge=meta.get("edge", ""), inner_rank=rank)
        )
    if out.core is None:
        raise FormatError("factorization_missing_core")
    return out


# ---------------------------------------------------------------------- reports


def _text_value(value: object) -> str:
    if isinstance(value, dict):
        return " ".join(f"{k}={_text_value(v)}" for k, v in value.items() if v not in (None, [], {}))
    if isinstance(value, list):
        return " ".join(_text_value(v) for v in value) if all(not isinstance(v, (dict, list)) for v in value) else str(value)
    return str(value)


def report_text(model: Union[BaseModel, Sequence[BaseModel]], header: Iterable[str] = ()) -> str:
    """Human-readable ``key: value`` lines; nested lists become ``key[i]: k=v ...``."""
    lines = list(header)
    items = [model] if isinstance(model, BaseModel) else list(model)
    for n, item in enumerate(items):
        prefix = f"[{n}] " if len(items) > 1 else ""
        for key, value in item.model_dump(mode="json").items():
            if isinstance(value, list) and value and isinstance(value[0], dict):
                for i, entry in enumerate(value):
                    lines.append(f"{prefix}{key}[{i}]: {_text_value(entry)}")
            elif value in (None, [], {}):
                continue
            else:
                lines.append(f"{prefix}{key}: {_text_value(value)}")
    return "\n".join(lines) + "\n"


def report_json(model: Union[BaseModel, Sequence[BaseModel]]) -> str:
    if isinstance(model, BaseModel):
        return model.model_dump_json(indent=2) + "\n"
    return "[\n" + ",\n".join(m.model_dump_json(indent=2) for m in model) + "\n]\n"


def read_text_file(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise FormatError(f"not_utf8: {path}") from None
    except OSError as exc:
        raise FormatError(f"cannot_read: {path}: {exc.strerror}") from None
