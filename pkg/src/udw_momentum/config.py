"""Run configuration: a sectioned ``key = value`` file parsed with configparser.

Grammar
-------
Sections in square brackets, one ``key = value`` per line, ``#`` or ``;``
comments.  Keys are case-sensitive (``m`` and ``M`` are different).  Angles
accept plain radians or multiples of pi: ``pi``, ``pi/4``, ``0.25*pi``,
``3pi/4``.  Lists are comma separated.  Booleans: on/off, yes/no,
true/false, 1/0.

Sections and keys (defaults in brackets)::

    [process]      m, M, P                              (required)
    [detectors]    delta1, delta2 (required), r [5], alpha [pi/2] (list),
                   radius_a [unset], eps1 [1], eps2 [1]
    [sweep]        r_min [0.05], r_max [50], r_count [200],
                   spacing [linear | geometric]
    [model]        filter [off], sigma_angle [0.3], form_factors [off]
    [stats]        epsilon [0.3], n_psi [4096]
    [oracle]       enabled [on], eta [0.01], n_k [1024], n_cos [4096],
                   n_psi [1024], mc_samples [unset],
                   eta_scan [0.04, 0.02, 0.01, 0.005]
    [classical2d]  px [P], py [0], m [process m],
                   delta1, delta2 [detector gaps]
    [output]       directory [out], seed [0]
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kinematics import DetectorPair, ProcessParams
from .oracle import OracleSettings


class ConfigError(ValueError):
    """Malformed configuration; the message carries file and line."""


SCHEMA = {
    "process": {"m", "M", "P"},
    "detectors": {"delta1", "delta2", "r", "alpha", "radius_a", "eps1", "eps2"},
    "sweep": {"r_min", "r_max", "r_count", "spacing"},
    "model": {"filter", "sigma_angle", "form_factors"},
    "stats": {"epsilon", "n_psi"},
    "oracle": {"enabled", "eta", "n_k", "n_cos", "n_psi", "mc_samples", "eta_scan"},
    "classical2d": {"px", "py", "m", "delta1", "delta2"},
    "output": {"directory", "seed"},
}

_PI_FORM = re.compile(r"^([+-]?\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?$")
_BOOLS = {"on": True, "yes": True, "true": True, "1": True, "off": False, "no": False, "false": False, "0": False}


def parse_angle(text: str) -> float:
    text = text.strip()
    match = _PI_FORM.match(text)
    if match:
        coef = match.group(1)
        value = (float(coef) if coef not in ("", "+", "-") else (-1.0 if coef == "-" else 1.0)) * math.pi
        if match.group(2):
            value /= float(match.group(2))
        return value
    return float(text)


@dataclass(frozen=True)
class SweepSpec:
    r_min: float = 0.05
    r_max: float = 50.0
    r_count: int = 200
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "geometric":
            return np.geomspace(self.r_min, self.r_max, self.r_count)
        return np.linspace(self.r_min, self.r_max, self.r_count)


@dataclass(frozen=True)
class ModelSpec:
    filter: bool = False
    sigma_angle: float = 0.3
    form_factors: bool = False

    def context_options(self) -> dict:
        return {"filter_sigma": self.sigma_angle if self.filter else None, "form_factors": self.form_factors}


@dataclass(frozen=True)
class Classical2DSpec:
    p: tuple[float, float]
    m: float
    delta1: float
    delta2: float


@dataclass(frozen=True)
class RunConfig:
    process: ProcessParams
    detectors: DetectorPair
    alphas: tuple[float, ...]
    sweep: SweepSpec = field(default_factory=SweepSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    epsilon: float = 0.3
    n_psi: int = 4096
    oracle_enabled: bool = True
    oracle: OracleSettings = field(default_factory=OracleSettings)
    eta_scan: tuple[float, ...] = (0.04, 0.02, 0.01, 0.005)
    classical2d: Classical2DSpec | None = None
    out_dir: str = "out"
    seed: int = 0


class _Reader:
    def __init__(self, parser, lines, source):
        self.parser = parser
        self.lines = lines
        self.source = source

    def line_of(self, section, key=None):
        in_section = False
        for n, raw in enumerate(self.lines, start=1):
            stripped = raw.strip()
            if stripped.startswith("["):
                in_section = stripped.strip("[]").strip() == section
                if key is None and in_section:
                    return n
                continue
            if in_section and key is not None and re.match(rf"^{re.escape(key)}\s*[=:]", stripped):
                return n
        return None

    def fail(self, section, key, message):
        line = self.line_of(section, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: [{section}] {key}: {message}")

    def has(self, section, key):
        return self.parser.has_option(section, key) and self.parser.get(section, key).strip() != ""

    def get(self, section, key, convert, default=None, required=False):
        if not self.has(section, key):
            if required:
                line = self.line_of(section)
                where = f"{self.source}:{line}" if line else self.source
                raise ConfigError(f"{where}: missing required key [{section}] {key}")
            return default
        raw = self.parser.get(section, key)
        try:
            return convert(raw)
        except (ValueError, KeyError) as exc:
            self.fail(section, key, f"cannot parse {raw.strip()!r} ({exc})")

    def get_list(self, section, key, convert, default):
        return self.get(section, key, lambda s: tuple(convert(x) for x in s.split(",") if x.strip()), default)


def _bool(text):
    return _BOOLS[text.strip().lower()]


def _int(text):
    return int(text.strip())


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    rd = _Reader(parser, text.splitlines(), source)

    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}:{rd.line_of(section)}: unknown section [{section}]")
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                rd.fail(section, key, "unknown key")

    try:
        process = ProcessParams(
            rd.get("process", "m", float, required=True),
            rd.get("process", "M", float, required=True),
            rd.get("process", "P", float, required=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}:{rd.line_of('process')}: [process] {exc}") from None

    alphas = rd.get_list("detectors", "alpha", parse_angle, (math.pi / 2,))
    radius = rd.get("detectors", "radius_a", float)
    try:
        detectors = DetectorPair(
            rd.get("detectors", "delta1", float, required=True),
            rd.get("detectors", "delta2", float, required=True),
            rd.get("detectors", "r", float, 5.0),
            alphas[0],
            rd.get("detectors", "eps1", float, 1.0),
            rd.get("detectors", "eps2", float, 1.0),
            radius,
        )
        for a in alphas:
            DetectorPair(detectors.delta1, detectors.delta2, detectors.r, a)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}:{rd.line_of('detectors')}: [detectors] {exc}") from None

    spacing = rd.get("sweep", "spacing", lambda s: s.strip().lower(), "linear")
    if spacing not in ("linear", "geometric"):
        rd.fail("sweep", "spacing", "must be 'linear' or 'geometric'")
    sweep = SweepSpec(
        rd.get("sweep", "r_min", float, 0.05),
        rd.get("sweep", "r_max", float, 50.0),
        rd.get("sweep", "r_count", _int, 200),
        spacing,
    )
    if not (0 <= sweep.r_min <= sweep.r_max and sweep.r_count >= 1):
        rd.fail("sweep", "r_min", "need 0 <= r_min <= r_max and r_count >= 1")
    if spacing == "geometric" and sweep.r_min <= 0:
        rd.fail("sweep", "r_min", "geometric spacing needs r_min > 0")

    model = ModelSpec(
        rd.get("model", "filter", _bool, False),
        rd.get("model", "sigma_angle", parse_angle, 0.3),
        rd.get("model", "form_factors", _bool, False),
    )
    if not model.sigma_angle > 0:
        rd.fail("model", "sigma_angle", "must be positive")
    if model.form_factors and radius is None:
        rd.fail("model", "form_factors", "requires [detectors] radius_a")

    epsilon = rd.get("stats", "epsilon", parse_angle, 0.3)
    if not 0 < epsilon < math.pi:
        rd.fail("stats", "epsilon", "must lie in (0, pi)")
    n_psi = rd.get("stats", "n_psi", _int, 4096)
    if n_psi < 1024:
        rd.fail("stats", "n_psi", "must be at least 1024")

    try:
        oracle = OracleSettings(
            eta=rd.get("oracle", "eta", float, 0.01),
            n_k=rd.get("oracle", "n_k", _int, 1024),
            n_cos=rd.get("oracle", "n_cos", _int, 4096),
            n_psi=rd.get("oracle", "n_psi", _int, 1024),
            mc_samples=rd.get("oracle", "mc_samples", _int),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}:{rd.line_of('oracle')}: [oracle] {exc}") from None
    eta_scan = rd.get_list("oracle", "eta_scan", float, (0.04, 0.02, 0.01, 0.005))
    if any(not e > 0 for e in eta_scan):
        rd.fail("oracle", "eta_scan", "all widths must be positive")

    classical = Classical2DSpec(
        (rd.get("classical2d", "px", float, process.P), rd.get("classical2d", "py", float, 0.0)),
        rd.get("classical2d", "m", float, process.m),
        rd.get("classical2d", "delta1", float, detectors.delta1),
        rd.get("classical2d", "delta2", float, detectors.delta2),
    )

    return RunConfig(
        process=process,
        detectors=detectors,
        alphas=alphas,
        sweep=sweep,
        model=model,
        epsilon=epsilon,
        n_psi=n_psi,
        oracle_enabled=rd.get("oracle", "enabled", _bool, True),
        oracle=oracle,
        eta_scan=eta_scan,
        classical2d=classical,
        out_dir=rd.get("output", "directory", str.strip, "out"),
        seed=rd.get("output", "seed", _int, 0),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return parse_config(text, str(path))


DEFAULT_CONFIG = """\
# default feasible set: m=1, M=4, P=3, delta1=2, delta2=3
[process]
m = 1
M = 4
P = 3

[detectors]
delta1 = 2
delta2 = 3
r = 5
alpha = 0, pi/4, pi/2

[sweep]
r_min = 0.05
r_max = 50
r_count = 200
spacing = linear

[model]
filter = off
sigma_angle = 0.3
form_factors = off

[stats]
epsilon = 0.3
n_psi = 4096

[oracle]
enabled = on
eta = 0.01
eta_scan = 0.04, 0.02, 0.01, 0.005

[output]
directory = out
seed = 0
"""
