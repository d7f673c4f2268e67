import json

import pytest

from iter_replay.config import DEFAULTS, deep_merge, desk_preset, get_dotted, load_config, normalize, parse_value, set_dotted


def test_normalize_fills_defaults():
    cfg = normalize({"env": {"task": "reach"}})
    assert cfg["env"]["task"] == "reach"
    assert cfg["train"]["batch_size"] == DEFAULTS["train"]["batch_size"]
    assert cfg["ker"]["n_ker"] == 0


@pytest.mark.parametrize(
    "bad",
    [
        {"bogus": {}},
        {"seeds": []},
        {"ker": {"n_ker": -1}},
        {"train": {"epochs": 0}},
        {"train": {"target_update": "sometimes"}},
        {"train": {"norm_from": "nowhere"}},
    ],
)
def test_normalize_rejects_bad_values(bad):
    with pytest.raises(ValueError):
        normalize(bad)


def test_dotted_helpers_do_not_mutate():
    base = {"a": {"b": 1}}
    out = set_dotted(base, "a.c.d", 2)
    assert base == {"a": {"b": 1}}
    assert get_dotted(out, "a.c.d") == 2
    assert get_dotted(out, "a.x", "miss") == "miss"
    assert deep_merge({"a": {"b": 1, "c": 2}}, {"a": {"c": 3}}) == {"a": {"b": 1, "c": 3}}


def test_parse_value():
    assert parse_value("4") == 4
    assert parse_value("0.05") == 0.05
    assert parse_value("[1, 2]") == [1, 2]
    assert parse_value("true") is True
    assert parse_value("step") == "step"


def test_load_config_and_preset(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"env": {"task": "slide"}, "seeds": [3]}))
    cfg = load_config(p)
    assert cfg["env"]["task"] == "slide" and cfg["seeds"] == [3]
    pre = desk_preset("push", **{"ker.n_ker": 4})
    assert pre["ker"]["n_ker"] == 4 and pre["train"]["target_update"] == "step"
