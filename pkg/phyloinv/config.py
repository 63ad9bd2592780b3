from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Optional

ENV_PREFIX = "PHYLOINV_"

_TRUTHY = {"1", "true", "yes", "on"}


def _env(name: str, default: str | None = None) -> str | None:
    return os.getenv(f"{ENV_PREFIX}{name}", default)


def _normalize_mode(value: str | None) -> str:
    if not value:
        return "exact"
    v = value.strip().lower()
    if v in {"float", "numeric", "double"}:
        return "float"
    return "exact"


@dataclass(frozen=True)
class Settings:
    seed: int
    scalar_mode: str
    tol: float
    probe_trials: int
    z_entry_range: int
    # Leibniz expansion cap for determinant_poly
    minor_max_order: int
    # Estimated-term guard for symbolic tilde substitution
    symbolic_term_guard: int
    threads: int
    minor_cap: Optional[int]
    sim_chunk_sites: int
    witness_limit: int
    log_level: str
    strict_stochastic: bool

    @staticmethod
    def load() -> "Settings":
        try:
            seed = int(_env("SEED", "0") or 0)
        except Exception:
            seed = 0
        scalar_mode = _normalize_mode(_env("SCALAR_MODE"))
        try:
            tol = float(_env("TOL", "1e-9") or 1e-9)
        except Exception:
            tol = 1e-9
        try:
            probe_trials = max(1, int(_env("PROBE_TRIALS", "5") or 5))
        except Exception:
            probe_trials = 5
        try:
            z_entry_range = max(1, int(_env("Z_ENTRY_RANGE", "9") or 9))
        except Exception:
            z_entry_range = 9
        try:
            minor_max_order = int(_env("MINOR_MAX_ORDER", "5") or 5)
        except Exception:
            minor_max_order = 5
        try:
            symbolic_term_guard = int(_env("SYMBOLIC_TERM_GUARD", "10000000") or 10_000_000)
        except Exception:
            symbolic_term_guard = 10_000_000
        try:
            threads = max(1, int(_env("THREADS", "1") or 1))
        except Exception:
            threads = 1
        minor_cap: Optional[int]
        try:
            raw_cap = _env("MINOR_CAP")
            minor_cap = int(raw_cap) if raw_cap else None
        except Exception:
            minor_cap = None
        try:
            sim_chunk_sites = max(1, int(_env("SIM_CHUNK_SITES", "4096") or 4096))
        except Exception:
            sim_chunk_sites = 4096
        try:
            witness_limit = max(1, int(_env("WITNESS_LIMIT", "5") or 5))
        except Exception:
            witness_limit = 5
        log_level = str(_env("LOG_LEVEL", "INFO") or "INFO").upper()
        strict_stochastic = str(_env("STRICT_STOCHASTIC", "true")).lower() in _TRUTHY

        return Settings(
            seed=seed,
            scalar_mode=scalar_mode,
            tol=tol,
            probe_trials=probe_trials,
            z_entry_range=z_entry_range,
            minor_max_order=minor_max_order,
            symbolic_term_guard=symbolic_term_guard,
            threads=threads,
            minor_cap=minor_cap,
            sim_chunk_sites=sim_chunk_sites,
            witness_limit=witness_limit,
            log_level=log_level,
            strict_stochastic=strict_stochastic,
        )

    def with_overrides(self, **overrides: object) -> "Settings":
        """Return a copy with non-None overrides applied (CLI flags win over env)."""
        clean = {k: v for k, v in overrides.items() if v is not None}
        if "scalar_mode" in clean:
            clean["scalar_mode"] = _normalize_mode(str(clean["scalar_mode"]))
        return replace(self, **clean)  # type: ignore[arg-type]
