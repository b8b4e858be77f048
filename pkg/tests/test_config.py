import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgers_pinn import config as cfgmod
from burgers_pinn.config import ConfigError, RunConfig

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=1e-12, max_value=1e12)
path_text = st.text(st.characters(whitelist_categories=("L", "N"), whitelist_characters="/_.-"), min_size=1, max_size=30)

configs = st.builds(
    RunConfig,
    problem=st.sampled_from(["ex1", "ex2", "ex3", "ex4", "ex5"]),
    layers=st.integers(1, 10),
    width=st.integers(1, 100),
    epochs=st.none() | st.integers(1, 10**6),
    n_interior=st.none() | st.integers(1, 10**5),
    n_initial=st.none() | st.integers(1, 10**4),
    n_boundary=st.none() | st.integers(1, 10**4),
    seed=st.integers(0, 2**62),
    resample=st.booleans(),
    lambda_ic=finite | st.just(0.0),
    lambda_bc=finite,
    learning_rate=finite,
    normalize=st.booleans(),
    log_every=st.integers(1, 1000),
    max_seconds=st.none() | finite,
    reynolds=st.none() | finite,
    times=st.none() | st.lists(st.floats(0, 10), min_size=1, max_size=5),
    grid_n=st.none() | st.integers(2, 5000),
    norm=st.sampled_from(["rms", "abs", "relative"]),
    output_dir=path_text,
    formats=st.sampled_from([["csv"], ["json"], ["csv", "json"], []]),
    sweep_layers=st.lists(st.integers(1, 7), min_size=1, max_size=5),
    sweep_widths=st.lists(st.integers(1, 60), min_size=1, max_size=5),
)


@settings(max_examples=200, deadline=None)
@given(cfg=configs)
def test_round_trip(cfg):
    cfg.validate()
    assert cfgmod.loads(cfgmod.dumps(cfg)) == cfg


def test_file_round_trip(tmp_path):
    cfg = RunConfig(problem="ex4", epochs=123, times=[0.0, 1.0], reynolds=40.0, output_dir=str(tmp_path))
    cfgmod.save(cfg, tmp_path / "run.cfg")
    assert cfgmod.load(tmp_path / "run.cfg") == cfg


def test_every_field_has_a_default():
    RunConfig()
    assert all(
        f.default is not dataclasses.MISSING or f.default_factory is not dataclasses.MISSING
        for f in dataclasses.fields(RunConfig)
    )


def test_comments_blanks_and_empty_values():
    text = """
    # a comment
    problem = ex3   # trailing comment
    epochs =
    times = 0.1, 0.5
    resample = TRUE
    """
    cfg = cfgmod.loads(text)
    assert (cfg.problem, cfg.epochs, cfg.times, cfg.resample) == ("ex3", None, [0.1, 0.5], True)


@pytest.mark.parametrize("text", [
    "no equals sign",
    "unknown_key = 3",
    "layers = four",
    "resample = maybe",
    "layers =",
])
def test_bad_files(text):
    with pytest.raises(ConfigError):
        cfgmod.loads(text)


@pytest.mark.parametrize("change", [
    {"epochs": 0},
    {"lambda_ic": -1.0},
    {"grid_n": 1},
    {"norm": "max"},
    {"formats": ["png"]},
    {"times": []},
    {"output_dir": "out#1"},
    {"learning_rate": 0.0},
])
def test_invalid_configs(change):
    with pytest.raises(ValueError):
        dataclasses.replace(RunConfig(), **change).validate()


def test_output_dir_environment(monkeypatch):
    monkeypatch.setenv(cfgmod.OUTPUT_ENV, "/tmp/somewhere")
    assert RunConfig().output_dir == "/tmp/somewhere"


def test_train_config_projection():
    tc = RunConfig(layers=3, width=20, epochs=5, seed=1).train_config()
    assert (tc.layers, tc.width, tc.epochs, tc.seed) == (3, 20, 5, 1)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    cfgmod.atomic_write_text(tmp_path / "a" / "b.txt", "hello")
    assert (tmp_path / "a" / "b.txt").read_text() == "hello"
    assert [p.name for p in (tmp_path / "a").iterdir()] == ["b.txt"]
