from phyloinv.config import Settings


def test_defaults(monkeypatch):
    for key in ("SEED", "SCALAR_MODE", "TOL", "PROBE_TRIALS", "THREADS", "MINOR_CAP", "STRICT_STOCHASTIC"):
        monkeypatch.delenv(f"PHYLOINV_{key}", raising=False)
    s = Settings.load()
    assert s.seed == 0
    assert s.scalar_mode == "exact"
    assert s.tol == 1e-9
    assert s.probe_trials == 5
    assert s.threads == 1
    assert s.minor_cap is None
    assert s.strict_stochastic


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("PHYLOINV_SEED", "17")
    monkeypatch.setenv("PHYLOINV_SCALAR_MODE", "Numeric")
    monkeypatch.setenv("PHYLOINV_THREADS", "0")
    monkeypatch.setenv("PHYLOINV_MINOR_CAP", "100")
    monkeypatch.setenv("PHYLOINV_LOG_LEVEL", "debug")
    s = Settings.load()
    assert s.seed == 17
    assert s.scalar_mode == "float"
    assert s.threads == 1
    assert s.minor_cap == 100
    assert s.log_level == "DEBUG"


def test_bad_values_fall_back(monkeypatch):
    monkeypatch.setenv("PHYLOINV_SEED", "abc")
    monkeypatch.setenv("PHYLOINV_TOL", "tiny")
    s = Settings.load()
    assert s.seed == 0
    assert s.tol == 1e-9


def test_with_overrides_skips_none(monkeypatch):
    monkeypatch.delenv("PHYLOINV_SEED", raising=False)
    s = Settings.load().with_overrides(seed=5, tol=None, scalar_mode="FLOAT")
    assert s.seed == 5
    assert s.tol == 1e-9
    assert s.scalar_mode == "float"
