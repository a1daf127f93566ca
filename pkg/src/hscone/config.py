"""Run configuration: an INI file with named sections.

Grammar (``configparser`` syntax, ``#`` or ``;`` comments)::

    [immersion]
    name = homogeneous_torus        # catalog or fixture name
    preset = iriyeh                 # remaining keys are immersion parameters
    isothermal = false

    [grid]
    resolution = 128, 128           # one value per parameter, or one for all

    [tolerances]
    stationarity = 1e-10            # any key of TOLERANCES

    [analyses]
    run = all                       # or a comma list of ANALYSES

    [search]
    preset = clifford               # initial torus (or q, a, b)
    targets = legendrian, minimal
    fix_weights = true
    trials = 100                    # > 1 draws q uniformly on the simplex
    max_iter = 1000
    min_success = 0.9

    [output]
    dir = results                   # default: $HSCONE_OUTPUT_DIR or ./hscone-out
    formats = csv, json

    [run]
    seed = 0
    threads = 1

Values are parsed as booleans (true/false/yes/no), numbers, comma lists of
numbers, or left as strings.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

OUTPUT_ENV = "HSCONE_OUTPUT_DIR"
DEFAULT_OUTPUT = "hscone-out"
MIN_RESOLUTION = 8

ANALYSES = ("invariants", "stationarity", "hopf", "hodge", "classify", "search")
FORMATS = ("csv", "json")
SEARCH_TARGETS = ("legendrian", "minimal")

TOLERANCES = {
    "isotropy": 1e-12,        # max |<J u_i, u_j>|
    "legendrian": 1e-12,      # max(isotropy, f)
    "minimal": 1e-10,         # max |Hbar|
    "identity": 1e-10,        # identities that hold for every immersion
    "stationarity": 1e-10,    # max(|S1|, |S2|)
    "isothermal": 1e-10,      # conformality defect gating the Hopf analysis
    "cr": 1e-10,              # d w / d zbar
    "candidate": 1e-4,        # f below which grid minima become zero candidates
    "newton": 1e-12,          # |alpha| at a refined Legendrian point
    "angle": 1e-8,            # spread of the Lagrangian angle; Legendrian test for theta
    "angle_gradient": 1e-6,   # finite-difference d theta vs beta
    "period": 1e-10,          # periods of beta
    "harmonicity": 1e-10,     # Laplacian of theta
    "classify": 1e-10,        # closed-form family conditions
    "search": 1e-8,           # search residual counted as converged
}


class ConfigError(ValueError):
    """Invalid or unreadable configuration (exit status 2)."""


@dataclass
class SearchConfig:
    init: dict = field(default_factory=lambda: {"preset": "clifford"})
    targets: tuple = SEARCH_TARGETS
    fix_weights: bool = False
    trials: int = 1
    max_iter: int = 1000
    min_success: float = 0.9


@dataclass
class Config:
    immersion: str
    params: dict = field(default_factory=dict)
    resolution: Optional[tuple] = None  # None: 128 per parameter
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    analyses: tuple = ANALYSES
    search: SearchConfig = field(default_factory=SearchConfig)
    output_dir: Optional[str] = None
    formats: tuple = FORMATS
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.resolution is not None:
            if any(int(r) != r or r < MIN_RESOLUTION for r in self.resolution):
                raise ConfigError(f"grid resolution must be an integer >= {MIN_RESOLUTION} "
                                  f"per dimension, got {list(self.resolution)}")
        unknown = set(self.tolerances) - set(TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance names {sorted(unknown)}; known: {sorted(TOLERANCES)}")
        for k, v in self.tolerances.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError(f"tolerance {k} must be a positive number, got {v!r}")
        bad = set(self.analyses) - set(ANALYSES)
        if bad:
            raise ConfigError(f"unknown analyses {sorted(bad)}; known: {list(ANALYSES)}")
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        bad = set(self.search.targets) - set(SEARCH_TARGETS)
        if bad:
            raise ConfigError(f"unknown search targets {sorted(bad)}")
        if self.search.trials < 1 or self.search.max_iter < 1:
            raise ConfigError("search trials and max_iter must be positive")
        if not 0 <= self.search.min_success <= 1:
            raise ConfigError("search min_success must lie in [0, 1]")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def with_overrides(self, out: Optional[str] = None, seed: Optional[int] = None,
                       tolerances: Optional[dict] = None, threads: Optional[int] = None,
                       analyses: Optional[tuple] = None) -> "Config":
        tol = dict(self.tolerances)
        tol.update(tolerances or {})
        return replace(self,
                       output_dir=self.output_dir if out is None else out,
                       seed=self.seed if seed is None else seed,
                       threads=self.threads if threads is None else threads,
                       analyses=self.analyses if analyses is None else tuple(analyses),
                       tolerances=tol)

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def parse_value(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in s:
        return [parse_value(p) for p in s.split(",") if p.strip()]
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def parse_tolerance_override(text: str):
    """``name=value`` from the command line."""
    name, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"--tol expects name=value, got {text!r}")
    name = name.strip()
    if name not in TOLERANCES:
        raise ConfigError(f"unknown tolerance name {name!r}; known: {sorted(TOLERANCES)}")
    try:
        return name, float(value)
    except ValueError as exc:
        raise ConfigError(f"tolerance {name} is not a number: {value!r}") from exc


def _as_tuple(v) -> tuple:
    return tuple(v) if isinstance(v, list) else (v,)


def _section(cp, name) -> dict:
    return {k: parse_value(v) for k, v in cp.items(name)} if cp.has_section(name) else {}


KNOWN_SECTIONS = {"immersion", "grid", "tolerances", "analyses", "search", "output", "run"}


def loads(text: str) -> Config:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    extra = set(cp.sections()) - KNOWN_SECTIONS
    if extra:
        raise ConfigError(f"unknown config sections {sorted(extra)}")

    imm = _section(cp, "immersion")
    if "name" not in imm:
        raise ConfigError("[immersion] needs a name")
    name = str(imm.pop("name"))

    grid = _section(cp, "grid")
    resolution = None
    if "resolution" in grid:
        resolution = _as_tuple(grid.pop("resolution"))
        if not all(isinstance(r, int) and not isinstance(r, bool) for r in resolution):
            raise ConfigError(f"grid resolution must be integers, got {list(resolution)}")
    if grid:
        raise ConfigError(f"unknown [grid] keys {sorted(grid)}")

    tol = dict(TOLERANCES)
    tol.update(_section(cp, "tolerances"))

    analyses = ANALYSES
    an = _section(cp, "analyses")
    if "run" in an:
        run = _as_tuple(an.pop("run"))
        analyses = ANALYSES if run == ("all",) else tuple(str(a) for a in run)
    if an:
        raise ConfigError(f"unknown [analyses] keys {sorted(an)}")

    s = _section(cp, "search")
    try:
        search = SearchConfig(
            targets=tuple(str(x) for x in _as_tuple(s.pop("targets", list(SEARCH_TARGETS)))),
            fix_weights=bool(s.pop("fix_weights", False)),
            trials=int(s.pop("trials", 1)),
            max_iter=int(s.pop("max_iter", 1000)),
            min_success=float(s.pop("min_success", 0.9)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [search] value: {exc}") from exc
    if s:
        search.init = s

    out = _section(cp, "output")
    formats = tuple(str(x) for x in _as_tuple(out.pop("formats", list(FORMATS))))
    output_dir = out.pop("dir", None)
    if out:
        raise ConfigError(f"unknown [output] keys {sorted(out)}")

    run = _section(cp, "run")
    seed, threads = run.pop("seed", 0), run.pop("threads", 1)
    if run:
        raise ConfigError(f"unknown [run] keys {sorted(run)}")
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in (seed, threads)):
        raise ConfigError("[run] seed and threads must be integers")

    return Config(name, imm, resolution, tol, analyses, search,
                  None if output_dir is None else str(output_dir), formats, seed, threads)


def load(path) -> Config:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)
