"""Loaders for the bundled plain-text data tables."""

from fractions import Fraction
from importlib import resources

from .errors import InvalidArgumentError


def _rows(text):
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line.split()


def _read(name, path=None):
    if path is not None:
        with open(path) as fh:
            return fh.read()
    return resources.files("oner").joinpath("data", name).read_text()


def load_isotopes(path=None):
    """Return ``{label: SpinSpec}`` from the isotope table."""
    from .spin import SpinSpec

    out = {}
    for row in _rows(_read("isotopes.txt", path)):
        if len(row) < 4:
            raise InvalidArgumentError(f"isotope row needs >= 4 columns: {row}")
        label, spin, gamma, q = row[:4]
        mass = float(row[4]) if len(row) > 4 else None
        out[label] = SpinSpec(
            I=float(Fraction(spin)),
            gamma_n=float(gamma),
            q_moment=float(q),
            label=label,
            mass_u=mass,
        )
    return out


def load_table1(path=None):
    """Return ``{(state, isotope): qzz_khz}`` with state in ``{"g", "e"}``."""
    out = {}
    for row in _rows(_read("nqi_table1.txt", path)):
        if len(row) != 3:
            raise InvalidArgumentError(f"NQI row needs 3 columns: {row}")
        state, label, qzz = row
        if state not in ("g", "e"):
            raise InvalidArgumentError(f"unknown electronic state {state!r}")
        out[(state, label)] = float(qzz)
    return out
