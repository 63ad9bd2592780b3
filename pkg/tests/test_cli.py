from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest

from cli.main import COMMAND_EXECUTORS, EXIT_INVALID, EXIT_OK, EXIT_REJECT, build_parser, main
from conftest import FIVE_TAXA_NEWICK, counterexample_tensor, random_integer_tensor, strassen_quartics
from phyloinv.formats import (
    read_factorization,
    read_generator_set,
    read_params,
    read_tensor,
    write_generator_set,
    write_params,
    write_tensor,
)
from phyloinv.model import identity_params, joint, psi, sample_params
from phyloinv.tree import parse_newick


@pytest.fixture
def files(tmp_path: Path):
    """Five-taxon tree, stochastic params and their joint tensor written to disk."""
    t = parse_newick(FIVE_TAXA_NEWICK)
    params = sample_params(t, 2, 4)
    paths = {
        "tree": tmp_path / "tree.nwk",
        "params": tmp_path / "params.txt",
        "tensor": tmp_path / "p.txt",
        "counterexample": tmp_path / "counterexample.txt",
        "counterexample_tree": tmp_path / "star.nwk",
    }
    paths["tree"].write_text(FIVE_TAXA_NEWICK + "\n")
    paths["params"].write_text(write_params(params, t))
    paths["tensor"].write_text(write_tensor(joint(t, params)))
    paths["counterexample"].write_text(write_tensor(counterexample_tensor()))
    paths["counterexample_tree"].write_text("(a1,a2,a3);\n")
    return {k: str(v) for k, v in paths.items()}


def test_every_command_has_a_parser():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    assert set(sub.choices) == set(COMMAND_EXECUTORS)


def test_joint_methods_agree(files, tmp_path, capsys):
    out_h, out_i = tmp_path / "h.txt", tmp_path / "i.txt"
    assert main(["joint", "--tree", files["tree"], "--params", files["params"], "--method", "history", "--out", str(out_h)]) == EXIT_OK
    assert main(["joint", "--tree", files["tree"], "--params", files["params"], "--out", str(out_i)]) == EXIT_OK
    assert read_tensor(out_h.read_text()).equals(read_tensor(out_i.read_text()))
    assert read_tensor(out_i.read_text()).equals(read_tensor(Path(files["tensor"]).read_text()))


def test_flatten_prints_matrix(files, capsys):
    assert main(["flatten", "--tensor", files["tensor"], "--blocks", "a1,a2|a3,a4,a5"]) == EXIT_OK
    flat = read_tensor(capsys.readouterr().out)
    assert flat.shape == (4, 8)


def test_flatten_bad_blocks(files, capsys):
    assert main(["flatten", "--tensor", files["tensor"], "--blocks", "a1|a2"]) == EXIT_INVALID
    assert "error:" in capsys.readouterr().err


def test_invariants_summary_and_file(files, tmp_path, capsys):
    out = tmp_path / "gens.txt"
    code = main(["invariants", "--tree", files["tree"], "--kappa", "2", "--set", "edge", "--out", str(out), "--format", "json"])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["total"] == 448
    assert "edge_minors=448" in summary["notes"]
    assert len(read_generator_set(out.read_text())) == 448


def test_invariants_tree_set_needs_base_for_kappa3(files, capsys):
    assert main(["invariants", "--tree", files["tree"], "--kappa", "3"]) == EXIT_INVALID
    assert "base_set_required" in capsys.readouterr().err


def test_invariants_three_taxa_is_empty(tmp_path, capsys):
    tree = tmp_path / "t.nwk"
    tree.write_text("(a,b,c);\n")
    assert main(["invariants", "--tree", str(tree), "--kappa", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "total: 0" in out
    assert "empty_generator_set" in out


def test_invariants_kappa4_without_base(files, capsys):
    assert main(["invariants", "--tree", files["tree"], "--kappa", "4"]) == EXIT_INVALID
    assert "no generating set is known for kappa=4" in capsys.readouterr().err


def test_joint_identity_params_and_bad_params(files, tmp_path, capsys):
    t = parse_newick(FIVE_TAXA_NEWICK)
    ident = tmp_path / "ident.txt"
    ident.write_text(write_params(identity_params(t, 2), t))
    assert main(["joint", "--tree", files["tree"], "--params", str(ident)]) == EXIT_OK
    p = read_tensor(capsys.readouterr().out)
    assert p.data[0, 0, 0, 0, 0] == p.data[1, 1, 1, 1, 1] == Fraction(1, 2)
    assert p.total() == 1

    broken = tmp_path / "broken.txt"
    lines = Path(files["params"]).read_text().splitlines()
    lines[3] = "1/2 oops"
    broken.write_text("\n".join(lines) + "\n")
    assert main(["joint", "--tree", files["tree"], "--params", str(broken)]) == EXIT_INVALID
    assert "line 4" in capsys.readouterr().err


def test_eval_exit_codes(files, tmp_path, capsys):
    gens = tmp_path / "gens.txt"
    main(["invariants", "--tree", files["tree"], "--kappa", "2", "--set", "edge", "--out", str(gens)])
    capsys.readouterr()
    assert main(["eval", "--generators", str(gens), "--tensor", files["tensor"]]) == EXIT_OK
    assert capsys.readouterr().out.rstrip().endswith("# nonzero: 0 of 448")

    noisy = tmp_path / "noisy.txt"
    p = read_tensor(Path(files["tensor"]).read_text())
    data = p.data.copy()
    data[0, 0, 0, 0, 1] += 1
    noisy.write_text(write_tensor(type(p)(p.axes, data, "exact")))
    assert main(["eval", "--generators", str(gens), "--tensor", str(noisy)]) == EXIT_REJECT


def test_membership_accepts_model_tensor(files, capsys):
    assert main(["membership", "--tree", files["tree"], "--tensor", files["tensor"], "--kappa", "2"]) == EXIT_OK
    assert "verdict: accept" in capsys.readouterr().out


def test_membership_rejects_counterexample(files, capsys):
    code = main(["membership", "--tree", files["counterexample_tree"], "--tensor", files["counterexample"], "--kappa", "3", "--test", "edge-rank", "--format", "json"])
    assert code == EXIT_REJECT
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "reject"
    assert report["witnesses"][0]["kind"] == "rank"


def test_membership_default_rejects_counterexample(files, capsys):
    code = main(["membership", "--tree", files["counterexample_tree"], "--tensor", files["counterexample"], "--kappa", "3"])
    assert code == EXIT_REJECT
    out = capsys.readouterr().out
    assert "verdict: reject" in out
    assert "witnesses[0]: kind=rank" in out


def test_membership_kappa3_default_mode(tmp_path, capsys):
    quartet = parse_newick("((a,b),(c,d));")
    tree = tmp_path / "q.nwk"
    tree.write_text("((a,b),(c,d));\n")
    base = tmp_path / "base.txt"
    base.write_text(write_generator_set(strassen_quartics()))
    point = tmp_path / "point.txt"
    point.write_text(write_tensor(psi(quartet, sample_params(quartet, 3, 4, "general"))))
    code = main(["membership", "--tree", str(tree), "--tensor", str(point), "--kappa", "3", "--base3", str(base), "--trials", "2"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "verdict: probabilistic-accept" in out
    assert "mode: probe" in out


def test_membership_float_mode(files, capsys):
    code = main(["membership", "--tree", files["tree"], "--tensor", files["tensor"], "--kappa", "2", "--test", "edge-rank", "--mode", "float"])
    assert code == EXIT_OK
    assert "float_mode" in capsys.readouterr().out


def test_decompose_and_recompose(files, tmp_path, capsys):
    factors = tmp_path / "factors.txt"
    assert main(["decompose", "--tree", files["tree"], "--tensor", files["tensor"], "--out", str(factors)]) == EXIT_OK
    assert "recomposed_exact: True" in capsys.readouterr().out
    assert len(read_factorization(factors.read_text()).pieces) == 2
    assert main(["recompose", "--factors", str(factors), "--tensor", files["tensor"]]) == EXIT_OK
    assert capsys.readouterr().out == "recomposed_equal: true\n"


def test_decompose_single_edge(files, capsys):
    t = parse_newick(FIVE_TAXA_NEWICK)
    a1 = t.leaf_vertex["a1"]
    inner = t.adjacency[a1][0]
    center = next(u for u in t.adjacency[inner] if not t.is_leaf(u))
    code = main(["decompose", "--tree", files["tree"], "--tensor", files["tensor"], "--edge", f"v{inner}-v{center}"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "# split: a1,a2|a3,a4,a5" in out
    assert "# factor: R" in out


def test_decompose_rank_violation_is_reject(files, tmp_path, capsys):
    assert main(["decompose", "--tree", files["counterexample_tree"], "--tensor", files["counterexample"], "--edge", "a3-v3", "--kappa", "3"]) == EXIT_REJECT
    assert "reject:" in capsys.readouterr().err


def test_simulate_and_split_support(files, tmp_path, capsys):
    quartet = tmp_path / "q.nwk"
    quartet.write_text("((a,b),(c,d));\n")
    params = tmp_path / "qp.txt"
    assert main(["sample-params", "--tree", str(quartet), "--kappa", "2", "--param-mode", "mixing", "--seed", "3", "--out", str(params)]) == EXIT_OK
    text = params.read_text()
    assert "# seed: 3" in text
    read_params(text, parse_newick("((a,b),(c,d));"))

    counts = tmp_path / "counts.txt"
    assert main(["simulate", "--tree", str(quartet), "--params", str(params), "--sites", "20000", "--seed", "1", "--out", str(counts)]) == EXIT_OK
    assert read_tensor(counts.read_text()).total() == 20000

    assert main(["split-support", "--tensor", str(counts), "--kappa", "2", "--format", "json"]) == EXIT_OK
    scores = json.loads(capsys.readouterr().out)
    assert len(scores) == 3
    assert scores[0]["split"] == "a,b|c,d"


def test_simulate_needs_stochastic_params(files, tmp_path, capsys):
    general = tmp_path / "g.txt"
    assert main(["sample-params", "--tree", files["tree"], "--kappa", "2", "--param-mode", "general", "--out", str(general)]) == EXIT_OK
    assert main(["simulate", "--tree", files["tree"], "--params", str(general), "--sites", "10"]) == EXIT_INVALID


def test_probe_command(tmp_path, capsys, rng):
    t = parse_newick("(a,b,c);")
    base = tmp_path / "base.txt"
    base.write_text(write_generator_set(strassen_quartics()))
    point = tmp_path / "point.txt"
    point.write_text(write_tensor(psi(t, sample_params(t, 3, 2, "general"))))
    assert main(["probe", "--generators", str(base), "--tensor", str(point), "--trials", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("# command: probe")
    assert "certificate: False" in out

    noisy = tmp_path / "noisy.txt"
    noisy.write_text(write_tensor(random_integer_tensor(rng, (3, 3, 3), t.taxa_order)))
    assert main(["probe", "--generators", str(base), "--tensor", str(noisy), "--trials", "2"]) == EXIT_REJECT
    assert "certificate: True" in capsys.readouterr().out


def test_joint_strict_stochastic(files, tmp_path, monkeypatch):
    t = parse_newick(FIVE_TAXA_NEWICK)
    lines = Path(files["params"]).read_text().splitlines()
    lines[0 if lines[0].startswith("pi:") else 1] = "pi: 1/2 1/4"
    loose = tmp_path / "loose.txt"
    loose.write_text("\n".join(lines) + "\n")
    assert main(["joint", "--tree", files["tree"], "--params", str(loose)]) == EXIT_INVALID
    monkeypatch.setenv("PHYLOINV_STRICT_STOCHASTIC", "false")
    assert main(["joint", "--tree", files["tree"], "--params", str(loose), "--out", str(tmp_path / "p.txt")]) == EXIT_OK
    assert read_tensor((tmp_path / "p.txt").read_text()).total() == joint(t, read_params(loose.read_text(), t)).total()


def test_missing_file_is_invalid(files, capsys):
    assert main(["membership", "--tree", "/nonexistent.nwk", "--tensor", files["tensor"], "--kappa", "2"]) == EXIT_INVALID
    assert "cannot_read" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["membership", "--kappa", "2"])
    assert info.value.code == 2


def test_non_utf8_input_is_invalid(files, tmp_path, capsys):
    binary = tmp_path / "tensor.bin"
    binary.write_bytes(b"\xff\xfe\x00axes")
    assert main(["membership", "--tree", files["tree"], "--tensor", str(binary), "--kappa", "2"]) == EXIT_INVALID
    assert "not_utf8" in capsys.readouterr().err
