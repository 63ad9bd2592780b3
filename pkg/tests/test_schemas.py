from __future__ import annotations

import json
from pathlib import Path

from schemas.generate_json_schema import BUNDLE_NAME, MODELS, check_payloads, main, model_for_payload, write_schemas
from schemas.models import MembershipRequest, SplitSupportRequest

PAYLOADS = Path(__file__).resolve().parents[1] / "scripts" / "payloads"


def test_write_schemas_with_bundle(tmp_path):
    written = write_schemas(tmp_path / "json")
    assert len(written) == len(MODELS) + 1
    bundle = json.loads((tmp_path / "json" / BUNDLE_NAME).read_text())
    assert {"MembershipReport", "MembershipRequest", "ProbeConfig"} <= set(bundle["$defs"])
    single = json.loads((tmp_path / "json" / "SplitScore.schema.json").read_text())
    assert single["title"] == "SplitScore"


def test_sample_payloads_are_valid():
    assert check_payloads(PAYLOADS) == []
    assert model_for_payload(PAYLOADS / "membership_quartet.json") is MembershipRequest
    assert model_for_payload(PAYLOADS / "split_support_quartet.json") is SplitSupportRequest


def test_bad_payloads_are_reported(tmp_path, capsys):
    (tmp_path / "membership_bad.json").write_text(json.dumps({"tree": "(a,b,c);", "kappa": 1}))
    (tmp_path / "mystery.json").write_text("{}")
    (tmp_path / "split_support_broken.json").write_text("{")
    errors = check_payloads(tmp_path)
    assert errors == [
        "invalid_payload: membership_bad.json: 2 error(s)",
        "unknown_payload: mystery.json",
        "bad_json: split_support_broken.json: line 1",
    ]
    assert main(["--check", "--payloads", str(tmp_path)]) == 1
    assert "ERROR: unknown_payload" in capsys.readouterr().err


def test_check_only_writes_nothing(tmp_path):
    out = tmp_path / "json"
    assert main(["--check", "--out-dir", str(out), "--payloads", str(PAYLOADS)]) == 0
    assert not out.exists()
    assert check_payloads(tmp_path) == [f"no_payloads: {tmp_path}"]
