#!/usr/bin/env python3
"""phyloinv command line.

Exit codes: 0 success or accept, 1 reject (a semantic negative), 2 usage or
validation error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

try:
    from dotenv import load_dotenv  # type: ignore

    load_dotenv(Path(__file__).resolve().parents[1] / ".env")
except Exception:
    pass

from phyloinv.config import Settings
from phyloinv.errors import PhyloInvError, RankViolationError
from phyloinv import formats
from phyloinv.invariants import count_edge_invariants, edge_invariants, probe_eval, tree_generators
from phyloinv.membership import (
    decompose_edge,
    decompose_full,
    default_membership_mode,
    edge_rank_test,
    membership,
    split_support,
)
from phyloinv.model import ModelParams, joint, sample_mixing_params, sample_params, simulate_sequences
from phyloinv.poly import evaluate
from phyloinv.tensor import FlatteningSpec, Tensor, flatten
from phyloinv.tree import Split, Tree, all_bipartitions, quartet_splits
from schemas.models import GeneratorSummary, ProbeConfig, RunConfig, ScalarMode, Verdict

logger = logging.getLogger("phyloinv.cli")

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_INVALID = 2


@dataclass
class CommandContext:
    args: argparse.Namespace
    settings: Settings
    run: RunConfig

    def emit(self, text: str) -> None:
        out = getattr(self.args, "out", None)
        if out:
            Path(out).write_text(text, encoding="utf-8")
            logger.info("wrote path=%s", out)
        else:
            sys.stdout.write(text)

    def report(self, model: object, header: Sequence[str] = ()) -> None:
        if self.args.format == "json":
            self.emit(formats.report_json(model))  # type: ignore[arg-type]
        else:
            self.emit(formats.report_text(model, header))  # type: ignore[arg-type]

    def tree(self) -> Tree:
        return formats.read_tree(formats.read_text_file(self.args.tree))

    def tensor(self, path: Optional[str] = None) -> Tensor:
        p = formats.read_tensor(formats.read_text_file(path or self.args.tensor))
        return p.to_mode(self.settings.scalar_mode) if self.args.mode else p

    def probe_config(self) -> ProbeConfig:
        return ProbeConfig(
            trials=self.settings.probe_trials,
            seed=self.settings.seed,
            z_entry_range=self.settings.z_entry_range,
            mode=ScalarMode(self.settings.scalar_mode),
            tol=self.settings.tol,
        )


CommandExecutor = Callable[[CommandContext], int]


def _cmd_joint(ctx: CommandContext) -> int:
    t = ctx.tree()
    params = formats.read_params(formats.read_text_file(ctx.args.params), t)
    if isinstance(params, ModelParams):
        params.validate(t, strict=ctx.settings.strict_stochastic)
    p = joint(t, params, ctx.args.method)
    ctx.emit(formats.write_tensor(p))
    return EXIT_OK


def _cmd_flatten(ctx: CommandContext) -> int:
    p = ctx.tensor()
    blocks = [[x.strip() for x in part.split(",") if x.strip()] for part in ctx.args.blocks.split("|")]
    ctx.emit(formats.write_tensor(flatten(p, FlatteningSpec.from_parts(blocks))))
    return EXIT_OK


def _read_base(ctx: CommandContext):
    if not ctx.args.base3:
        return None
    return formats.read_generator_set(formats.read_text_file(ctx.args.base3))


def _cmd_invariants(ctx: CommandContext) -> int:
    t = ctx.tree()
    kappa = ctx.args.kappa
    base = _read_base(ctx)
    states = ctx.args.states
    edge_total = count_edge_invariants(t, kappa, states)
    if ctx.args.set == "edge":
        gens = edge_invariants(t, kappa, states, cap=ctx.settings.minor_cap, max_order=ctx.settings.minor_max_order)
    else:
        gens = tree_generators(
            t,
            kappa,
            base,
            "symbolic",
            ctx.settings.symbolic_term_guard,
            ctx.settings.minor_max_order,
            ctx.settings.minor_cap,
        )
    notes = [f"edge_minors={edge_total}"]
    if not gens.polys:
        notes.append("empty_generator_set: no condition beyond the ambient space")
        logger.warning("empty_generator_set taxa=%s kappa=%s", t.n_taxa, kappa)
    summary = GeneratorSummary(kappa=kappa, states=list(gens.states), total=len(gens), by_source=gens.source_counts(), notes=notes)
    if ctx.args.out:
        ctx.emit(formats.write_generator_set(gens))
    sys.stdout.write(formats.report_text(summary) if ctx.args.format == "text" else formats.report_json(summary))
    return EXIT_OK


def _cmd_eval(ctx: CommandContext) -> int:
    gens = formats.read_generator_set(formats.read_text_file(ctx.args.generators))
    p = ctx.tensor()
    lines: List[str] = []
    nonzero = 0
    for i, (poly, source) in enumerate(gens):
        value = evaluate(poly, p)
        zero = value == 0 if p.mode == "exact" else abs(float(value)) <= ctx.settings.tol  # type: ignore[arg-type]
        nonzero += 0 if zero else 1
        lines.append(f"{i} {source} {formats.format_scalar(value)}")
    lines.append(f"# nonzero: {nonzero} of {len(gens)}")
    ctx.emit("\n".join(lines) + "\n")
    return EXIT_OK if nonzero == 0 else EXIT_REJECT


def _cmd_membership(ctx: CommandContext) -> int:
    t = ctx.tree()
    p = ctx.tensor()
    kappa = ctx.args.kappa
    header: List[str] = []
    test = ctx.args.test or default_membership_mode(kappa)
    if test == "edge-rank":
        report = edge_rank_test(p, t, kappa, ctx.settings.tol, ctx.settings.threads, ctx.settings.witness_limit)
    else:
        if test == "probe":
            header = ctx.run.header_lines()
        report = membership(
            p,
            t,
            kappa,
            _read_base(ctx),
            test,
            ctx.probe_config(),
            ctx.settings.symbolic_term_guard,
            ctx.settings.minor_max_order,
            ctx.settings.threads,
            ctx.settings.witness_limit,
        )
    ctx.report(report, header)
    return EXIT_REJECT if report.verdict == Verdict.reject else EXIT_OK


def _cmd_decompose(ctx: CommandContext) -> int:
    t = ctx.tree()
    p = ctx.tensor()
    if ctx.args.edge:
        fe = decompose_edge(p, t, formats.resolve_edge(t, ctx.args.edge, None), ctx.args.kappa)
        header = [f"# edge: {ctx.args.edge}", f"# split: {fe.split}", f"# inner_rank: {fe.inner_rank}"]
        ctx.emit(formats.write_tensor(fe.q, header) + formats.write_tensor(fe.r, ["# factor: R"]))
        return EXIT_OK
    factors = decompose_full(p, t, ctx.args.kappa)
    ctx.emit(formats.write_factorization(factors))
    if ctx.args.out:
        summary = factors.summary(recomposed_exact=factors.recompose().equals(p))
        sys.stdout.write(formats.report_text(summary) if ctx.args.format == "text" else formats.report_json(summary))
    return EXIT_OK


def _cmd_recompose(ctx: CommandContext) -> int:
    factors = formats.read_factorization(formats.read_text_file(ctx.args.factors))
    p = factors.recompose()
    if ctx.args.tensor:
        original = ctx.tensor()
        same = original.equals(p)
        sys.stdout.write(f"recomposed_equal: {str(same).lower()}\n")
        if ctx.args.out:
            ctx.emit(formats.write_tensor(p))
        return EXIT_OK if same else EXIT_REJECT
    ctx.emit(formats.write_tensor(p))
    return EXIT_OK


def _cmd_split_support(ctx: CommandContext) -> int:
    counts = ctx.tensor()
    taxa = counts.taxa
    if ctx.args.splits:
        candidates = [Split.parse(s, taxa) for s in ctx.args.splits]
    elif len(taxa) == 4:
        candidates = quartet_splits(taxa)
    else:
        candidates = [s for s in all_bipartitions(taxa) if not s.is_trivial]
    mode = ctx.settings.scalar_mode if ctx.args.mode else "float"
    scores = split_support(counts, candidates, ctx.args.kappa, mode, ctx.settings.tol, ctx.args.raw_minors, ctx.settings.threads)
    ctx.report(scores)
    return EXIT_OK


def _cmd_simulate(ctx: CommandContext) -> int:
    t = ctx.tree()
    params = formats.read_params(formats.read_text_file(ctx.args.params), t)
    if not isinstance(params, ModelParams):
        raise PhyloInvError("simulation_needs_stochastic_params: params file has no 'pi:' line")
    counts = simulate_sequences(t, params, ctx.args.sites, ctx.settings.seed, ctx.settings.sim_chunk_sites, ctx.settings.threads)
    header = ctx.run.header_lines() + [f"# sites: {ctx.args.sites}", f"# chunk_sites: {ctx.settings.sim_chunk_sites}"]
    ctx.emit(formats.write_tensor(counts, header))
    return EXIT_OK


def _cmd_sample_params(ctx: CommandContext) -> int:
    t = ctx.tree()
    root = t.vertex_by_name(ctx.args.root) if ctx.args.root else None
    if ctx.args.param_mode == "mixing":
        params = sample_mixing_params(t, ctx.args.kappa, ctx.settings.seed, root=root)
    else:
        params = sample_params(t, ctx.args.kappa, ctx.settings.seed, ctx.args.param_mode, root, ctx.args.diagonal_boost)
    ctx.emit(formats.write_params(params, t, ctx.run.header_lines() + [f"# param_mode: {ctx.args.param_mode}"]))
    return EXIT_OK


def _cmd_probe(ctx: CommandContext) -> int:
    base = formats.read_generator_set(formats.read_text_file(ctx.args.generators))
    p = ctx.tensor()
    report = probe_eval(base, p, ctx.probe_config(), threads=ctx.settings.threads)
    ctx.report(report, ctx.run.header_lines())
    return EXIT_REJECT if report.certificate else EXIT_OK


COMMAND_EXECUTORS: Dict[str, CommandExecutor] = {
    "joint": _cmd_joint,
    "flatten": _cmd_flatten,
    "invariants": _cmd_invariants,
    "eval": _cmd_eval,
    "membership": _cmd_membership,
    "decompose": _cmd_decompose,
    "recompose": _cmd_recompose,
    "split-support": _cmd_split_support,
    "simulate": _cmd_simulate,
    "sample-params": _cmd_sample_params,
    "probe": _cmd_probe,
}


def _states(value: str) -> List[int]:
    try:
        return [int(x) for x in value.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad_states: {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: PHYLOINV_SEED or 0)")
    common.add_argument("--mode", choices=["exact", "float"], default=None, help="Scalar mode for input tensors")
    common.add_argument("--tol", type=float, default=None, help="Relative singular-value tolerance in float mode")
    common.add_argument("--trials", type=int, default=None, help="Probe trials")
    common.add_argument("--threads", type=int, default=None, help="Worker threads")
    common.add_argument("--out", default=None, help="Output path (default: stdout)")
    common.add_argument("--format", choices=["text", "json"], default="text", help="Report format")
    common.add_argument("--log-level", dest="log_level", default=None)

    parser = argparse.ArgumentParser(prog="phyloinv", description="Phylogenetic invariants for the general Markov model.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("joint", parents=[common], help="Joint leaf distribution from tree and params")
    p.add_argument("--tree", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--method", choices=["history", "inductive"], default="inductive")

    p = sub.add_parser("flatten", parents=[common], help="Flatten a tensor on a taxon partition")
    p.add_argument("--tensor", required=True)
    p.add_argument("--blocks", required=True, help="e.g. 'a1,a2|a3,a4,a5'")

    p = sub.add_parser("invariants", parents=[common], help="Generate edge or tree-wide invariants")
    p.add_argument("--tree", required=True)
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--states", type=_states, default=None)
    p.add_argument("--base3", default=None, help="Generator-set file for the 3-leaf star")
    p.add_argument("--set", choices=["tree", "edge"], default="tree")

    p = sub.add_parser("eval", parents=[common], help="Evaluate a generator set at a tensor")
    p.add_argument("--generators", required=True)
    p.add_argument("--tensor", required=True)

    p = sub.add_parser("membership", parents=[common], help="Test membership in the tree's zero set")
    p.add_argument("--tree", required=True)
    p.add_argument("--tensor", required=True)
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--base3", default=None)
    p.add_argument("--test", choices=["exact", "probe", "edge-rank"], default=None, help="Default: exact for kappa 2, probe above")

    p = sub.add_parser("decompose", parents=[common], help="Factor a tensor along edges")
    p.add_argument("--tree", required=True)
    p.add_argument("--tensor", required=True)
    p.add_argument("--kappa", type=int, default=2)
    p.add_argument("--edge", default=None, help="Single edge 'u-v'; default factors the whole tree")

    p = sub.add_parser("recompose", parents=[common], help="Recompose a factorization file")
    p.add_argument("--factors", required=True)
    p.add_argument("--tensor", default=None, help="Compare against this tensor")

    p = sub.add_parser("split-support", parents=[common], help="Score candidate splits on count data")
    p.add_argument("--tensor", required=True)
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--splits", nargs="*", default=None)
    p.add_argument("--raw-minors", dest="raw_minors", action="store_true")

    p = sub.add_parser("simulate", parents=[common], help="Simulate i.i.d. sites and count leaf patterns")
    p.add_argument("--tree", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--sites", type=int, required=True)

    p = sub.add_parser("sample-params", parents=[common], help="Draw random parameters")
    p.add_argument("--tree", required=True)
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--param-mode", dest="param_mode", choices=["stochastic", "general", "mixing"], default="stochastic")
    p.add_argument("--root", default=None)
    p.add_argument("--diagonal-boost", dest="diagonal_boost", type=int, default=0)

    p = sub.add_parser("probe", parents=[common], help="Numeric probe of a base set at a tensor")
    p.add_argument("--generators", required=True)
    p.add_argument("--tensor", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = Settings.load().with_overrides(
        seed=args.seed,
        scalar_mode=args.mode,
        tol=args.tol,
        probe_trials=args.trials,
        threads=args.threads,
        log_level=args.log_level.upper() if args.log_level else None,
    )
    logging.basicConfig(level=getattr(logging, settings.log_level, logging.INFO), format="%(levelname)s %(name)s %(message)s")
    paths = {k: str(v) for k, v in vars(args).items() if k in {"tree", "params", "tensor", "base3", "generators", "factors", "out"} and v}
    try:
        run = RunConfig(
            command=args.command,
            seed=settings.seed,
            scalar_mode=ScalarMode(settings.scalar_mode),
            tol=settings.tol,
            probe_trials=settings.probe_trials,
            threads=settings.threads,
            paths=paths,
        )
        ctx = CommandContext(args=args, settings=settings, run=run)
        return COMMAND_EXECUTORS[args.command](ctx)
    except RankViolationError as exc:
        logger.info("rank_violation command=%s rank=%s", args.command, exc.rank)
        sys.stderr.write(f"reject: {exc}\n")
        return EXIT_REJECT
    except (PhyloInvError, ValidationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except Exception:
        logger.exception("command_failed command=%s", args.command)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
