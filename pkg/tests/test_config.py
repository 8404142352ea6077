import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmkit.config import ConfigError, RunConfig, config_keys, load_config
from sbmkit.io import canonical_json


def _write(tmp_path, text):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    return p


def test_defaults_validate():
    cfg = load_config()
    assert isinstance(cfg, RunConfig) and cfg.kernel.dim == 3


def test_unknown_key_reports_line(tmp_path):
    p = _write(tmp_path, "kernel:\n  dim: 2\nrun:\n  seed: 3\n  pathz: 10\n")
    with pytest.raises(ConfigError) as e:
        load_config(p)
    assert e.value.line == 5 and "run.pathz" in str(e.value) and ":5:" in str(e.value)


def test_nested_unknown_key(tmp_path):
    p = _write(tmp_path, "experiment:\n  bhp:\n    pathz: 1\n")
    with pytest.raises(ConfigError) as e:
        load_config(p)
    assert e.value.line == 3


def test_bad_value_reports_line(tmp_path):
    p = _write(tmp_path, "scheme:\n  dt: fast\n")
    with pytest.raises(ConfigError) as e:
        load_config(p)
    assert e.value.line == 2


def test_invalid_value_reports_line(tmp_path):
    p = _write(tmp_path, "run:\n  workers: 0\n")
    with pytest.raises(ConfigError) as e:
        load_config(p)
    assert e.value.line == 2


def test_yaml_syntax_error(tmp_path):
    p = _write(tmp_path, "run: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_overrides_take_precedence(tmp_path):
    p = _write(tmp_path, "run:\n  seed: 3\n")
    cfg = load_config(p, [("run.seed", "9"), ("experiment.bhp.kernels", '["pure_bm"]'),
                          ("kernel.spec", "pure_bm")])
    assert cfg.run.seed == 9 and cfg.experiment.bhp.kernels == ["pure_bm"] and cfg.kernel.spec == "pure_bm"
    with pytest.raises(ConfigError):
        load_config(None, [("run.nope", "1")])
    with pytest.raises(ConfigError):
        load_config(None, [("run.seed.x", "1")])


@given(st.integers(1, 64), st.text(max_size=8))
def test_hash_ignores_workers_and_output(w, out):
    a = load_config()
    b = load_config(None, [("run.workers", str(w)), ("output.dir", json.dumps(out))])
    assert a.hash() == b.hash()


def test_hash_sees_seed():
    assert load_config().hash() != load_config(None, [("run.seed", "1")]).hash()


def test_config_keys_cover_every_leaf_and_are_documented():
    keys = dict(config_keys())
    assert "experiment.counterexample.depths" in keys and "run.workers" in keys
    from pathlib import Path
    doc = Path(__file__).resolve().parents[1] / "docs" / "config_keys.md"
    text = doc.read_text()
    missing = [k for k in keys if f"`{k}`" not in text]
    assert not missing


def test_round_trip_through_yaml(tmp_path):
    import yaml
    cfg = load_config(None, [("run.seed", "5")])
    p = _write(tmp_path, yaml.safe_dump(cfg.to_dict()))
    assert load_config(p).hash() == cfg.hash()
    assert canonical_json(cfg.to_dict()) == canonical_json(load_config(p).to_dict())
