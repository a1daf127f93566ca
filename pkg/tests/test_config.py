import pytest
from hypothesis import given
from hypothesis import strategies as st

from hscone import config as cfgmod
from hscone.config import ConfigError, loads, parse_tolerance_override, parse_value

BASE = "[immersion]\nname = clifford_torus\n"


def test_minimal_config_defaults(monkeypatch, tmp_path):
    monkeypatch.delenv(cfgmod.OUTPUT_ENV, raising=False)
    cfg = loads(BASE)
    assert cfg.immersion == "clifford_torus" and cfg.params == {}
    assert cfg.analyses == cfgmod.ANALYSES and cfg.resolution is None
    assert cfg.tolerances == cfgmod.TOLERANCES and cfg.seed == 0
    assert str(cfg.resolved_output_dir()) == cfgmod.DEFAULT_OUTPUT
    monkeypatch.setenv(cfgmod.OUTPUT_ENV, str(tmp_path))
    assert cfg.resolved_output_dir() == tmp_path
    assert cfg.with_overrides(out="elsewhere").resolved_output_dir().name == "elsewhere"


def test_full_config_round_trip():
    cfg = loads(BASE + """isothermal = true   # inline comment
[grid]
resolution = 64, 32
[tolerances]
stationarity = 1e-9
[analyses]
run = invariants, hopf
[search]
q = 0.2, 0.3, 0.5
a = 1, 0, -1
b = 0, 1, -1
targets = legendrian
fix_weights = yes
trials = 10
[output]
dir = out
formats = json
[run]
seed = 7
threads = 2
""")
    assert cfg.params == {"isothermal": True}
    assert cfg.resolution == (64, 32)
    assert cfg.tolerances["stationarity"] == 1e-9 and cfg.tolerances["isotropy"] == 1e-12
    assert cfg.analyses == ("invariants", "hopf")
    assert cfg.search.init == {"q": [0.2, 0.3, 0.5], "a": [1, 0, -1], "b": [0, 1, -1]}
    assert cfg.search.targets == ("legendrian",) and cfg.search.fix_weights and cfg.search.trials == 10
    assert cfg.output_dir == "out" and cfg.formats == ("json",)
    assert (cfg.seed, cfg.threads) == (7, 2)


@pytest.mark.parametrize("text", [
    "[grid]\nresolution = 64\n",                              # no [immersion]
    BASE + "[grid]\nresolution = 4\n",                        # below the minimum
    BASE + "[grid]\nresolution = 64.5\n",
    BASE + "[grid]\nresolution = 64\nspacing = 2\n",
    BASE + "[tolerances]\nstationarty = 1e-9\n",              # misspelt name
    BASE + "[tolerances]\nminimal = -1\n",
    BASE + "[tolerances]\nminimal = tight\n",
    BASE + "[analyses]\nrun = invariants, spectra\n",
    BASE + "[analyses]\nskip = hopf\n",
    BASE + "[search]\ntargets = special\n",
    BASE + "[search]\ntrials = 0\n",
    BASE + "[search]\nmin_success = 1.5\n",
    BASE + "[output]\nformats = xml\n",
    BASE + "[output]\ncolour = red\n",
    BASE + "[run]\nseed = -1\n",
    BASE + "[run]\nthreads = 0\n",
    BASE + "[run]\nseed = abc\n",
    BASE + "[extras]\nx = 1\n",
    "not an ini file",
])
def test_invalid_configs_raise(text):
    with pytest.raises(ConfigError):
        loads(text)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        cfgmod.load(tmp_path / "missing.ini")


def test_tolerance_overrides():
    assert parse_tolerance_override("cr=1e-8") == ("cr", 1e-8)
    for bad in ("cr", "nope=1", "cr=small"):
        with pytest.raises(ConfigError):
            parse_tolerance_override(bad)
    cfg = loads(BASE).with_overrides(tolerances={"cr": 1e-8}, seed=3, analyses=("hopf",))
    assert cfg.tolerances["cr"] == 1e-8 and cfg.seed == 3 and cfg.analyses == ("hopf",)
    with pytest.raises(ConfigError):
        loads(BASE).with_overrides(threads=0)


@given(st.integers(-10**6, 10**6))
def test_parse_value_integers(n):
    assert parse_value(f" {n} ") == n


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_parse_value_floats(x):
    assert parse_value(repr(x)) == x


def test_parse_value_kinds():
    assert parse_value("Yes") is True and parse_value("off") is False
    assert parse_value("1, 2.5, x") == [1, 2.5, "x"]
    assert parse_value("latlong") == "latlong"
