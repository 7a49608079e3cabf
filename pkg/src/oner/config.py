"""Scenario configuration: a typed INI schema with validation and canonical echo.

Files use ``[system]``, ``[field]``, ``[laser]``, ``[run]`` and ``[vib]``
sections. Every key is parsed and checked before anything is computed;
unknown sections or keys are rejected. ``canonical()`` renders the resolved
values back to strings that parse to identical values, which is what the
JSON run summaries echo.
"""

import configparser
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .optics import TwoLevelParams
from .spin import spin_label

AUTO = "auto"


def _float(text):
    try:
        value = float(text)
    except ValueError as exc:
        raise InvalidArgumentError(f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise InvalidArgumentError(f"not finite: {text!r}")
    return value


def _int(text):
    try:
        return int(text)
    except ValueError as exc:
        raise InvalidArgumentError(f"not an integer: {text!r}") from exc


def _auto_float(text):
    return None if text.strip().lower() == AUTO else _float(text)


def _pair(text):
    try:
        a, b = (float(Fraction(p.strip())) for p in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidArgumentError(f"expected 'm_i,m_f', got {text!r}") from exc
    return (a, b)


def _choice(*options):
    def parse(text):
        if text not in options:
            raise InvalidArgumentError(f"{text!r} not one of {options}")
        return text

    return parse


def _render(value):
    if value is None:
        return AUTO
    if isinstance(value, tuple):
        return ",".join(spin_label(m) for m in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# section -> key -> (parser, default text)
SCHEMA = {
    "system": {
        "isotope": (_choice("Li-7", "Na-23"), "Li-7"),
        "rho_ee": (_auto_float, AUTO),
    },
    "field": {
        "B_T": (_float, "1.0"),
        "theta_deg": (_float, "45.0"),
    },
    "laser": {
        "omega0_thz": (_float, "459.87"),
        "Omega_ghz": (_float, "1.0"),
        "Delta_ghz": (_float, "0.0"),
        "Gamma_ghz": (_float, "1.0"),
        "gamma_c_ghz": (_float, "0.0"),
        "duty": (_float, "0.5"),
        "drive_mode": (_choice("ideal-square", "simulated-waveform"), "ideal-square"),
        "waveform_samples": (_int, "400"),
    },
    "run": {
        "profile": (_choice("paper", "desk"), "paper"),
        "target": (_pair, "3/2,1/2"),
        "zeeman_over_rabi": (_float, "200.0"),
        "method": (_choice("floquet", "lab"), "floquet"),
        "rep_rate_khz": (_auto_float, AUTO),
        "t_end_ms": (_auto_float, AUTO),
        "max_samples": (_int, "20000"),
        "f_min_khz": (_auto_float, AUTO),
        "f_max_khz": (_auto_float, AUTO),
        "n_points": (_int, "161"),
        "t_probe_ms": (_auto_float, AUTO),
        "workers": (_int, "1"),
        "peak_threshold": (_float, "0.5"),
        "delta_min_ghz": (_auto_float, AUTO),
        "delta_max_ghz": (_auto_float, AUTO),
        "n_delta": (_int, "41"),
        "enforce_regime": (_choice("yes", "no"), "yes"),
    },
    "vib": {
        "state": (_choice("ground", "excited"), "excited"),
        "model": (_choice("morse", "harmonic", "file"), "morse"),
        "pes_file": (str, ""),
        "Re_bohr": (_auto_float, AUTO),
        "omega_e_cm": (_auto_float, AUTO),
        "De_cm": (_auto_float, AUTO),
        "mu_u": (_auto_float, AUTO),
        "n_states": (_int, "6"),
        "n_points": (_int, "2001"),
    },
}


def _check_ranges(v):
    def need(cond, msg):
        if not cond:
            raise InvalidArgumentError(msg)

    need(v["field"]["B_T"] >= 0, "field.B_T must be non-negative")
    need(0 <= v["field"]["theta_deg"] <= 180, "field.theta_deg must lie in [0, 180]")
    rho = v["system"]["rho_ee"]
    need(rho is None or 0 <= rho <= 0.5, "system.rho_ee must lie in [0, 0.5]")
    las = v["laser"]
    need(las["omega0_thz"] > 0, "laser.omega0_thz must be positive")
    need(las["Gamma_ghz"] > 0, "laser.Gamma_ghz must be positive")
    need(las["gamma_c_ghz"] >= 0, "laser.gamma_c_ghz must be non-negative")
    need(0 < las["duty"] < 1, "laser.duty must lie in (0, 1)")
    need(las["waveform_samples"] >= 10, "laser.waveform_samples must be >= 10")
    run = v["run"]
    need(run["zeeman_over_rabi"] > 1, "run.zeeman_over_rabi must exceed 1")
    for key in ("rep_rate_khz", "t_end_ms", "t_probe_ms", "f_min_khz", "f_max_khz"):
        need(run[key] is None or run[key] > 0, f"run.{key} must be positive")
    if run["f_min_khz"] is not None and run["f_max_khz"] is not None:
        need(run["f_min_khz"] < run["f_max_khz"], "run.f_min_khz must be below run.f_max_khz")
    need(run["n_points"] >= 2, "run.n_points must be >= 2")
    need(run["n_delta"] >= 1, "run.n_delta must be >= 1")
    need(run["workers"] >= 1, "run.workers must be >= 1")
    need(run["max_samples"] >= 10, "run.max_samples must be >= 10")
    m_i, m_f = run["target"]
    need(round(abs(m_i - m_f)) in (1, 2) and m_i > m_f, "run.target must be 'm_i,m_f' with m_i - m_f in (1, 2)")
    vib = v["vib"]
    need(vib["n_states"] >= 1, "vib.n_states must be >= 1")
    need(vib["n_points"] >= 50, "vib.n_points must be >= 50")
    need(vib["model"] != "file" or vib["pes_file"], "vib.pes_file is required for model=file")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, typed configuration values keyed by section and key."""

    values: dict

    def __getitem__(self, section):
        return self.values[section]

    @classmethod
    def from_raw(cls, raw):
        """Parse ``{section: {key: text}}`` layered over the schema defaults."""
        for section, entries in raw.items():
            if section not in SCHEMA:
                raise InvalidArgumentError(f"unknown config section [{section}]")
            for key in entries:
                if key not in SCHEMA[section]:
                    raise InvalidArgumentError(f"unknown config key {section}.{key}")
        values = {}
        for section, keys in SCHEMA.items():
            values[section] = {}
            for key, (parse, default) in keys.items():
                text = raw.get(section, {}).get(key, default)
                try:
                    values[section][key] = parse(str(text).strip())
                except InvalidArgumentError as exc:
                    raise InvalidArgumentError(f"{section}.{key}: {exc}") from None
        _check_ranges(values)
        return cls(values)

    def canonical(self):
        """String form of every value; ``from_raw(canonical())`` is an identity."""
        return {s: {k: _render(v) for k, v in keys.items()} for s, keys in self.values.items()}

    def to_json(self):
        return json.dumps(self.canonical(), sort_keys=True)

    @property
    def theta(self):
        return float(np.deg2rad(self["field"]["theta_deg"]))

    @property
    def optics(self):
        las = self["laser"]
        return TwoLevelParams(
            Omega=las["Omega_ghz"],
            Gamma=las["Gamma_ghz"],
            Delta=las["Delta_ghz"],
            gamma_c=las["gamma_c_ghz"],
            omega0=las["omega0_thz"],
        )

    @property
    def enforce_regime(self):
        return self["run"]["enforce_regime"] == "yes"

    def scenario(self, isotope=None):
        """Build the :class:`~oner.dynamics.OnerScenario` this config describes."""
        from .dynamics import lina_scenario

        las, run = self["laser"], self["run"]
        return lina_scenario(
            isotope or self["system"]["isotope"],
            profile=run["profile"],
            B=self["field"]["B_T"],
            theta=self.theta,
            optics=self.optics,
            zeeman_over_rabi=run["zeeman_over_rabi"],
            duty=las["duty"],
            drive_mode=las["drive_mode"],
            target=run["target"],
            rep_rate_khz=run["rep_rate_khz"],
            rho_ee=self["system"]["rho_ee"],
            waveform_samples=las["waveform_samples"],
        )


def default_config_text():
    return resources.files("oner.data").joinpath("lina.ini").read_text()


def _parse_ini(text, source):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise InvalidArgumentError(f"cannot parse {source}: {exc}") from exc
    return {s: dict(parser[s]) for s in parser.sections()}


def read_raw(path=None):
    """Raw ``{section: {key: text}}`` from an INI file or a JSON run summary.

    ``None`` loads the bundled LiNa scenario. JSON input takes the ``config``
    member of a summary written by the CLI, so a run can be replayed from its
    own output.
    """
    if path is None:
        return _parse_ini(default_config_text(), "lina.ini")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"invalid JSON in {path}: {exc}") from exc
        raw = doc.get("config", doc)
        if not isinstance(raw, dict) or not all(isinstance(v, dict) for v in raw.values()):
            raise InvalidArgumentError(f"{path} holds no section mapping")
        return {s: {k: str(v) for k, v in keys.items()} for s, keys in raw.items()}
    return _parse_ini(text, str(path))


def apply_overrides(raw, assignments):
    """Layer ``section.key=value`` strings over ``raw`` (returns a new mapping)."""
    out = {s: dict(keys) for s, keys in raw.items()}
    for item in assignments:
        name, sep, value = item.partition("=")
        section, dot, key = name.strip().partition(".")
        if not sep or not dot or not key:
            raise InvalidArgumentError(f"override must look like section.key=value, got {item!r}")
        out.setdefault(section, {})[key] = value.strip()
    return out


def load_config(path=None, overrides=(), profile=None):
    raw = apply_overrides(read_raw(path), overrides)
    if profile is not None:
        raw.setdefault("run", {})["profile"] = profile
    return ScenarioConfig.from_raw(raw)
