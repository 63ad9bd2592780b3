from .config import Settings
from .errors import (
    PhyloInvError,
    NewickSyntaxError,
    TreeValidationError,
    ShapeMismatchError,
    ScalarModeError,
    ParamsError,
    RankViolationError,
    TermCountGuardError,
    BaseSetRequiredError,
    FormatError,
)
from .tree import Split, Tree, parse_newick, write_newick
from .tensor import FlatteningSpec, Tensor, act, flatten, rank_exact, rank_numeric, star, subarray, unflatten
from .poly import GeneratorSet, Polynomial, Variable
from .model import GeneralParams, ModelParams, joint_history, joint_inductive, sample_params, simulate_sequences
from .invariants import edge_invariants, probe_eval, star_generators, tree_generators
from .membership import decompose_edge, decompose_full, edge_rank_test, membership, split_support

__all__ = [
    "Settings",
    "PhyloInvError",
    "NewickSyntaxError",
    "TreeValidationError",
    "ShapeMismatchError",
    "ScalarModeError",
    "ParamsError",
    "RankViolationError",
    "TermCountGuardError",
    "BaseSetRequiredError",
    "FormatError",
    "Split",
    "Tree",
    "parse_newick",
    "write_newick",
    "FlatteningSpec",
    "Tensor",
    "act",
    "flatten",
    "rank_exact",
    "rank_numeric",
    "star",
    "subarray",
    "unflatten",
    "GeneratorSet",
    "Polynomial",
    "Variable",
    "GeneralParams",
    "ModelParams",
    "joint_history",
    "joint_inductive",
    "sample_params",
    "simulate_sequences",
    "edge_invariants",
    "probe_eval",
    "star_generators",
    "tree_generators",
    "decompose_edge",
    "decompose_full",
    "edge_rank_test",
    "membership",
    "split_support",
]
