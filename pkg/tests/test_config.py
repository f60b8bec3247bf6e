import pytest

from sipauth.config import Config, load_config, parse_kv_file


def test_defaults():
    cfg = load_config(environ={})
    assert cfg == Config()
    assert cfg.freshness_window_ms == 5000
    assert cfg.bind() == ("127.0.0.1", 5062)
    assert str(cfg.db_file("zhang")) == "sipauth-zhang.db"


def test_file_then_environment(tmp_path):
    path = tmp_path / "sipauth.conf"
    path.write_text("# comment\ncurve_profile = STD-256\nfreshness_window_ms = 0x10\nrealm = clinic.example\n")
    cfg = load_config(path, environ={"SIPAUTH_REALM": "ward.example"})
    assert cfg.curve_profile == "STD-256"
    assert cfg.freshness_window_ms == 16
    assert cfg.realm == "ward.example"
    assert cfg.updated(realm=None, hash_name="blake2s").hash_name == "blake2s"


def test_rejects_bad_input(tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        load_config(path, environ={})
    with pytest.raises(ValueError):
        parse_kv_file("no equals sign here")
    with pytest.raises(ValueError):
        Config(freshness_window_ms=0)
