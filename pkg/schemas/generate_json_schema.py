"""
Generate JSON Schemas for the report, config and API request models, and
validate the sample API payloads against their request models.

Usage:
  python -m schemas.generate_json_schema
  python -m schemas.generate_json_schema --check            # payloads only
  python -m schemas.generate_json_schema --out-dir /tmp/json --payloads scripts/payloads
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel, ValidationError
from pydantic.json_schema import models_json_schema

from .models import (
    ProbeConfig,
    ProbeReport,
    MembershipReport,
    SplitScore,
    FactorizationSummary,
    GeneratorSummary,
    RunConfig,
    JointRequest,
    FlattenRequest,
    MembershipRequest,
    InvariantSummaryRequest,
    SplitSupportRequest,
)

ROOT = Path(__file__).resolve().parents[1]
BUNDLE_NAME = "phyloinv.schema.json"

MODELS: list[type[BaseModel]] = [
    ProbeConfig,
    ProbeReport,
    MembershipReport,
    SplitScore,
    FactorizationSummary,
    GeneratorSummary,
    RunConfig,
    JointRequest,
    FlattenRequest,
    MembershipRequest,
    InvariantSummaryRequest,
    SplitSupportRequest,
]

# payload file stem prefix -> request model of the endpoint it is posted to
PAYLOAD_MODELS: Dict[str, type[BaseModel]] = {
    "joint": JointRequest,
    "flatten": FlattenRequest,
    "membership": MembershipRequest,
    "invariants_summary": InvariantSummaryRequest,
    "split_support": SplitSupportRequest,
}


def write_schemas(out_dir: Path) -> List[Path]:
    """Write every model's schema plus one bundle sharing a single ``$defs`` table."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for model in MODELS:
        path = out_dir / f"{model.__name__}.schema.json"
        path.write_text(json.dumps(model.model_json_schema(), ensure_ascii=False, indent=2))
        written.append(path)
    _, bundle = models_json_schema([(m, "validation") for m in MODELS], title="phyloinv")
    path = out_dir / BUNDLE_NAME
    path.write_text(json.dumps(bundle, ensure_ascii=False, indent=2))
    written.append(path)
    for path in written:
        print(f"Wrote: {path}")
    return written


def model_for_payload(path: Path) -> Optional[type[BaseModel]]:
    # longest prefix wins
    for prefix in sorted(PAYLOAD_MODELS, key=len, reverse=True):
        if path.stem.startswith(prefix):
            return PAYLOAD_MODELS[prefix]
    return None


def check_payloads(payload_dir: Path) -> List[str]:
    """Validate each ``*.json`` in ``payload_dir``; returns one error line per bad file."""
    errors: List[str] = []
    files = sorted(payload_dir.glob("*.json"))
    if not files:
        errors.append(f"no_payloads: {payload_dir}")
    for path in files:
        model = model_for_payload(path)
        if model is None:
            errors.append(f"unknown_payload: {path.name}")
            continue
        try:
            model.model_validate(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            errors.append(f"bad_json: {path.name}: line {exc.lineno}")
            continue
        except ValidationError as exc:
            errors.append(f"invalid_payload: {path.name}: {exc.error_count()} error(s)")
            continue
        print(f"OK: {path.name} ({model.__name__})")
    return errors


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(description="Dump JSON Schemas and validate sample payloads")
    ap.add_argument("--out-dir", default=str(Path(__file__).resolve().parent / "json"))
    ap.add_argument("--payloads", default=str(ROOT / "scripts" / "payloads"))
    ap.add_argument("--check", action="store_true", help="Validate payloads without writing schemas")
    args = ap.parse_args(argv)

    if not args.check:
        write_schemas(Path(args.out_dir))
    errors = check_payloads(Path(args.payloads))
    for line in errors:
        print(f"ERROR: {line}", file=sys.stderr)
    return 1 if errors else 0


if __name__ == "__main__":
    raise SystemExit(main())
