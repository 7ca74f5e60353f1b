import pytest

from hiltta.config import ConfigError, describe_keys, load_config


def test_defaults_without_file():
    cfg = load_config()
    assert cfg.method == "tent"
    assert cfg.batch_size == 200
    assert cfg.label_rate == 0.03
    assert cfg.ema_beta == 0.5
    assert cfg.intervention_every == 1


def test_file_parsing_with_comments(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# a comment\n"
        "method = pl\n"
        "seed = 42   # inline comment\n"
        "\n"
        "label_rate = 0.05\n"
        "use_anchor = false\n"
    )
    cfg = load_config(path)
    assert cfg.method == "pl"
    assert cfg.seed == 42
    assert cfg.label_rate == 0.05
    assert cfg.use_anchor is False


def test_unknown_key_rejected_with_name(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("not_a_key = 3\n")
    with pytest.raises(ConfigError, match="not_a_key"):
        load_config(path)


def test_bad_value_reports_key(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = banana\n")
    with pytest.raises(ConfigError, match="seed"):
        load_config(path)


def test_set_overrides():
    cfg = load_config(overrides=["method=pl", "seed=9", "dual=true"])
    assert cfg.method == "pl" and cfg.seed == 9
    assert len(cfg.candidate_pool()) == 25


def test_set_rejects_unknown_and_malformed():
    with pytest.raises(ConfigError):
        load_config(overrides=["bogus=1"])
    with pytest.raises(ConfigError):
        load_config(overrides=["seed"])


def test_invalid_enums_rejected():
    with pytest.raises(ConfigError):
        load_config(overrides=["method=sar"])
    with pytest.raises(ConfigError):
        load_config(overrides=["selection_strategy=badge"])
    with pytest.raises(ConfigError):
        load_config(overrides=["fallback=retry"])


def test_dual_requires_pl():
    cfg = load_config(overrides=["dual=true"])  # method defaults to tent
    with pytest.raises(ConfigError, match="dual"):
        cfg.candidate_pool()


def test_pool_override():
    cfg = load_config(overrides=["pool=0.1,0.5", "method=pl"])
    pool = cfg.candidate_pool()
    assert [hp.tau for hp in pool.entries] == [0.1, 0.5]


def test_engine_config_roundtrip():
    cfg = load_config(overrides=["method=pl", "ema_beta=0.7", "supervised_steps=2"])
    engine = cfg.engine_config()
    assert engine.ema_beta == 0.7
    assert engine.supervised_steps == 2
    assert engine.pool.method == "pl"


def test_stream_spec_roundtrip():
    cfg = load_config(overrides=["num_classes=4", "corruption_strength=0.5"])
    spec = cfg.stream_spec()
    assert spec.num_classes == 4
    assert spec.corruption_strength == 0.5


def test_describe_keys_lists_everything():
    text = describe_keys()
    for key in ("method", "label_rate", "intervention_every", "record_timing", "port"):
        assert key in text
