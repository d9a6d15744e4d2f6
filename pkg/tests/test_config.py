import json

import pytest

from config.config_manager import DEFAULT_CONFIG, ConfigManager
from config.config_utils import (load_experiment_file, merge_overrides, parse_bool, parse_experiment_text,
                                 parse_int_list, parse_radius)
from utils.error_handler import ConfigError, ParseError, ValidationError


@pytest.mark.parametrize("text,expected", [("3", [3]), ("2..5", [2, 3, 4, 5]), ("4,2,4,3", [2, 3, 4])])
def test_parse_int_list(text, expected):
    assert parse_int_list(text) == expected


@pytest.mark.parametrize("text", ["5..2", "", "a..b"])
def test_parse_int_list_errors(text):
    with pytest.raises(ValueError):
        parse_int_list(text)


def test_parse_helpers():
    assert parse_bool("Yes") is True
    assert parse_bool("off") is False
    with pytest.raises(ValueError):
        parse_bool("maybe")
    assert parse_radius("Scaled") == "scaled"
    assert parse_radius("fixed") == "fixed"
    assert parse_radius("2.5") == 2.5


def test_experiment_text():
    values = parse_experiment_text("# comment\nkind = conj2\nk=2..4  # trailing\n\nfit=false\nn-factor=3\n")
    assert values == {"kind": "conj2", "k": [2, 3, 4], "fit": False, "n_factor": 3}


@pytest.mark.parametrize("text,line,field", [
    ("kind=g\nwhat=1\n", 2, "what"),
    ("kind=g\nkind=pinning\n", 2, "kind"),
    ("trials=many\n", 1, "trials"),
    ("kind=g\njust words\n", 2, None),
])
def test_experiment_text_errors(text, line, field):
    with pytest.raises(ParseError) as info:
        parse_experiment_text(text)
    assert info.value.line == line
    assert info.value.field == field


def test_load_experiment_file(tmp_path):
    path = tmp_path / "run.exp"
    path.write_text("kind=g\ntrials=7\n")
    assert load_experiment_file(str(path)) == {"kind": "g", "trials": 7}
    with pytest.raises(ValidationError):
        load_experiment_file(str(tmp_path / "none.exp"))


def test_merge_overrides():
    merged = merge_overrides({"kind": "g", "trials": 5}, {"trials": 9, "seed": None, "density-threshold": 0.2})
    assert merged == {"kind": "g", "trials": 9, "density_threshold": 0.2}


def test_manager_defaults_and_dot_access():
    manager = ConfigManager()
    assert manager.get("harness.report_file") == "report.json"
    assert manager.get("events.missing", "fallback") == "fallback"
    manager.set("events.radius", 3.0)
    assert manager.get("events.radius") == 3.0
    assert DEFAULT_CONFIG["events"]["radius"] == 100.0
    manager.reset()
    assert manager.get("events.radius") == 100.0
    assert manager.validate() == []


def test_manager_validation_errors():
    manager = ConfigManager()
    manager.set("events.search_mode", "sideways")
    manager.set("harness.rejection_batch", 0)
    errors = manager.validate()
    assert any("search_mode" in e for e in errors)
    assert any("rejection_batch" in e for e in errors)


def test_load_settings_file(tmp_path):
    manager = ConfigManager()
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"events": {"radius": 7.0}}))
    manager.load_file(str(good))
    assert manager.get("events.radius") == 7.0
    assert manager.get("events.density_threshold") == 0.01

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"harness": {"regular_pair_method": "coin"}}))
    with pytest.raises(ConfigError):
        manager.load_file(str(bad))
    with pytest.raises(ConfigError):
        manager.load_file(str(tmp_path / "missing.json"))
    listing = tmp_path / "list.json"
    listing.write_text("[1]")
    with pytest.raises(ConfigError):
        manager.load_file(str(listing))
