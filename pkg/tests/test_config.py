import pytest

from outerspace.automorphisms import Automorphism
from outerspace.config import ConfigError, ExperimentConfig, load_config, load_group


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_full_config(tmp_path):
    cfg = load_config(write(tmp_path, """
seed = 3
[inputs]
group = "g.toml"
[budgets]
word_radius = 4
samples = 50
[outputs]
report = "r.json"
[constants]
eta = "1/3"
lambda = 2
"""))
    assert cfg.seed == 3 and cfg.budget("samples") == 50 and cfg.budget("event_cap", 7) == 7
    assert cfg.constants == {"eta": "1/3", "lambda": "2"}
    assert cfg.to_dict()["outputs"] == {"report": "r.json"}


@pytest.mark.parametrize("text", [
    "[budgets]\nsamples = 0\n",
    "[budgets]\nradius = 3\n",
    "[constants]\ngamma = 1\n",
    "seed = \"x\"\n",
    "[mystery]\nx = 1\n",
    "[budgets\n",
])
def test_bad_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_empty_config_is_valid():
    assert ExperimentConfig().budgets == {}


def test_group_formats(tmp_path):
    names, auts = load_group(write(tmp_path, """
rank = 2
[generators]
f = "a -> a b; b -> b"
g = ["a -> b", "b -> a"]
"""))
    assert names == ["f", "g"]
    assert auts == [Automorphism.from_text("a -> a b\nb -> b"), Automorphism.from_text("a -> b\nb -> a")]


def test_group_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_group(write(tmp_path, "seed = 1\n"))
    with pytest.raises(ConfigError):
        load_group(write(tmp_path, 'rank = 3\n[generators]\nf = "a -> b; b -> a"\n'))
