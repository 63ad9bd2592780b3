from __future__ import annotations

from typing import Any, Dict, List
import logging
import os

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
try:
    # Load .env located at project root for local development
    from dotenv import load_dotenv
    from pathlib import Path as _Path

    load_dotenv(_Path(__file__).resolve().parents[1] / ".env")
except Exception:
    # dotenv is optional at runtime; environment may already be set
    pass

try:
    from phyloinv import formats
    from phyloinv.config import Settings
    from phyloinv.errors import PhyloInvError
    from phyloinv.invariants import count_edge_invariants, tree_generators
    from phyloinv.membership import edge_rank_test, membership, split_support
    from phyloinv.model import joint
    from phyloinv.tensor import FlatteningSpec, flatten
    from phyloinv.tree import Split, all_bipartitions, quartet_splits
    from schemas.models import (
        FlattenRequest,
        GeneratorSummary,
        InvariantSummaryRequest,
        JointRequest,
        MembershipReport,
        MembershipRequest,
        ProbeConfig,
        ScalarMode,
        SplitScore,
        SplitSupportRequest,
    )
except Exception:  # pragma: no cover - local dev fallback from api/ directory
    import sys
    from pathlib import Path

    sys.path.append(str(Path(__file__).resolve().parents[1]))
    from phyloinv import formats  # type: ignore
    from phyloinv.config import Settings  # type: ignore
    from phyloinv.errors import PhyloInvError  # type: ignore
    from phyloinv.invariants import count_edge_invariants, tree_generators  # type: ignore
    from phyloinv.membership import edge_rank_test, membership, split_support  # type: ignore
    from phyloinv.model import joint  # type: ignore
    from phyloinv.tensor import FlatteningSpec, flatten  # type: ignore
    from phyloinv.tree import Split, all_bipartitions, quartet_splits  # type: ignore
    from schemas.models import (
        FlattenRequest,
        GeneratorSummary,
        InvariantSummaryRequest,
        JointRequest,
        MembershipReport,
        MembershipRequest,
        ProbeConfig,
        ScalarMode,
        SplitScore,
        SplitSupportRequest,
    )  # type: ignore


logger = logging.getLogger("phyloinv.api")

app = FastAPI(title="phyloinv API", version="0.1.0")

# CORS. Allow comma-separated origins via CORS_ALLOW_ORIGINS or '*'.
_origins = os.getenv("CORS_ALLOW_ORIGINS", "*")
allow_origins = [o.strip() for o in _origins.split(",") if o.strip()] or ["*"]
app.add_middleware(
    CORSMiddleware,
    allow_origins=allow_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _settings() -> Settings:
    return Settings.load()


def _probe_config(settings: Settings) -> ProbeConfig:
    return ProbeConfig(
        trials=settings.probe_trials,
        seed=settings.seed,
        z_entry_range=settings.z_entry_range,
        mode=ScalarMode(settings.scalar_mode),
        tol=settings.tol,
    )


def _unprocessable(exc: Exception) -> HTTPException:
    logger.info("request_rejected detail=%s", exc)
    return HTTPException(status_code=422, detail=str(exc))


@app.get("/health")
def health() -> Dict[str, str]:
    return {"status": "ok"}


@app.post("/api/joint")
def api_joint(req: JointRequest) -> Dict[str, Any]:
    try:
        t = formats.read_tree(req.tree)
        params = formats.read_params(req.params, t)
        p = joint(t, params, req.method)
    except PhyloInvError as exc:
        raise _unprocessable(exc)
    return {"tensor": formats.write_tensor(p), "axes": [list(a) for a in p.axes]}


@app.post("/api/flatten")
def api_flatten(req: FlattenRequest) -> Dict[str, Any]:
    try:
        p = formats.read_tensor(req.tensor)
        flat = flatten(p, FlatteningSpec.from_parts(req.blocks))
    except PhyloInvError as exc:
        raise _unprocessable(exc)
    return {"tensor": formats.write_tensor(flat), "shape": list(flat.shape)}


@app.post("/api/membership", response_model=MembershipReport)
def api_membership(req: MembershipRequest) -> MembershipReport:
    settings = _settings()
    try:
        t = formats.read_tree(req.tree)
        p = formats.read_tensor(req.tensor)
        if req.test == "edge-rank":
            return edge_rank_test(p, t, req.kappa, settings.tol, settings.threads, settings.witness_limit)
        base = formats.read_generator_set(req.base3) if req.base3 else None
        return membership(
            p,
            t,
            req.kappa,
            base,
            req.test,
            req.probe or _probe_config(settings),
            settings.symbolic_term_guard,
            settings.minor_max_order,
            settings.threads,
            settings.witness_limit,
        )
    except PhyloInvError as exc:
        raise _unprocessable(exc)


@app.post("/api/invariants/summary", response_model=GeneratorSummary)
def api_invariant_summary(req: InvariantSummaryRequest) -> GeneratorSummary:
    settings = _settings()
    try:
        t = formats.read_tree(req.tree)
        base = formats.read_generator_set(req.base3) if req.base3 else None
        gens = tree_generators(
            t,
            req.kappa,
            base,
            "symbolic",
            settings.symbolic_term_guard,
            settings.minor_max_order,
            settings.minor_cap,
        )
        edge_total = count_edge_invariants(t, req.kappa, req.states)
    except PhyloInvError as exc:
        raise _unprocessable(exc)
    notes = [f"edge_minors={edge_total}"]
    if not gens.polys:
        notes.append("empty_generator_set: no condition beyond the ambient space")
    return GeneratorSummary(
        kappa=req.kappa,
        states=list(gens.states),
        total=len(gens),
        by_source=gens.source_counts(),
        notes=notes,
    )


@app.post("/api/split-support", response_model=List[SplitScore])
def api_split_support(req: SplitSupportRequest) -> List[SplitScore]:
    settings = _settings()
    try:
        counts = formats.read_tensor(req.tensor)
        taxa = counts.taxa
        if req.splits:
            candidates = [Split.parse(s, taxa) for s in req.splits]
        elif len(taxa) == 4:
            candidates = quartet_splits(taxa)
        else:
            candidates = [s for s in all_bipartitions(taxa) if not s.is_trivial]
        return split_support(counts, candidates, req.kappa, "float", settings.tol, req.raw_minors, settings.threads)
    except PhyloInvError as exc:
        raise _unprocessable(exc)
