"""Finite-difference vibrational structure of a diatomic on a tabulated potential.

Solves ``-(1/2mu) psi'' + V psi = E psi`` in atomic units on a uniform radial
grid with the three-point Laplacian. ``psi`` vanishes one step outside either
end of the grid (Dirichlet). Energies are reported in cm^-1.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .constants import AMU_TO_ME, HARTREE_TO_CM
from .errors import InvalidArgumentError

MIN_POINTS = 50
V_UNITS = {"hartree": 1.0, "cm-1": 1.0 / HARTREE_TO_CM}


@dataclass
class VibrationalProblem:
    """Radial grid (bohr), potential samples, reduced mass (u) and property curves."""

    grid: np.ndarray
    V: np.ndarray
    mu: float
    V_unit: str = "hartree"
    properties: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.V.shape:
            raise InvalidArgumentError("grid and potential must be 1-D and aligned")
        if self.grid.size < MIN_POINTS:
            raise InvalidArgumentError(f"need at least {MIN_POINTS} grid points")
        h = np.diff(self.grid)
        if np.any(h <= 0):
            raise InvalidArgumentError("grid must be strictly increasing")
        if np.max(np.abs(h - h[0])) > 1e-9 * h[0]:
            raise InvalidArgumentError("finite-difference stencil requires a uniform grid")
        if self.V_unit not in V_UNITS:
            raise InvalidArgumentError(f"unknown potential unit {self.V_unit!r}")
        if not np.all(np.isfinite(self.V)):
            raise InvalidArgumentError("potential must be finite (bounded below)")
        if self.mu <= 0:
            raise InvalidArgumentError("reduced mass must be positive")
        for name, curve in self.properties.items():
            self.properties[name] = self._aligned(curve)

    def _aligned(self, curve):
        curve = np.asarray(curve, dtype=float)
        if curve.shape != self.grid.shape:
            raise InvalidArgumentError("property curve is not aligned with the grid")
        return curve

    @property
    def step(self):
        return float(self.grid[1] - self.grid[0])

    @property
    def V_hartree(self):
        return self.V * V_UNITS[self.V_unit]


@dataclass
class VibrationalResult:
    energies: np.ndarray  # cm^-1
    psi: np.ndarray  # (n_states, n_grid), sum |psi|^2 h = 1
    problem: VibrationalProblem
    bound: np.ndarray

    @property
    def fundamental(self):
        """``E1 - E0`` in cm^-1."""
        return float(self.energies[1] - self.energies[0])

    def density(self, n=0):
        return self.psi[n] ** 2

    def nodes(self, n):
        psi = self.psi[n]
        significant = psi[np.abs(psi) > 1e-6 * np.max(np.abs(psi))]
        return int(np.count_nonzero(np.diff(np.sign(significant))))

    def averages(self, n=0):
        return {k: vibrational_average(self, v, n) for k, v in self.problem.properties.items()}


def solve_vibrational(problem, n_states=6):
    """Lowest ``n_states`` eigenpairs of the finite-difference Hamiltonian."""
    N = problem.grid.size
    if n_states < 1 or n_states >= N / 4:
        raise InvalidArgumentError(f"n_states={n_states} must be in [1, N/4)")
    h = problem.step
    mu = problem.mu * AMU_TO_ME
    kin = 1.0 / (2.0 * mu * h * h)
    diag = 2.0 * kin + problem.V_hartree
    off = np.full(N - 1, -kin)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_states - 1))
    psi = vecs.T / np.sqrt(h)
    for row in psi:
        # first lobe positive
        lead = row[np.argmax(np.abs(row) > 1e-3 * np.max(np.abs(row)))]
        if lead < 0:
            row *= -1
    energies = vals * HARTREE_TO_CM
    plateau = problem.V_hartree[-1] * HARTREE_TO_CM
    bound = energies < plateau
    if not np.all(bound):
        warnings.warn(
            f"{int(np.sum(~bound))} requested state(s) lie above the outer potential "
            f"plateau ({plateau:.6g} cm^-1) and are box states, not bound levels",
            RuntimeWarning,
            stacklevel=2,
        )
    return VibrationalResult(energies, psi, problem, bound)


def vibrational_average(result, curve, n=0):
    """``sum f(R_i) |psi_n(R_i)|^2 dR`` for a curve (array or property name)."""
    if isinstance(curve, str):
        curve = result.problem.properties[curve]
    curve = np.asarray(curve, dtype=float)
    if np.ndim(curve) == 0:
        curve = np.full(result.problem.grid.shape, float(curve))
    if curve.shape != result.problem.grid.shape:
        raise InvalidArgumentError("property curve is not aligned with the grid")
    return float(np.sum(curve * result.psi[n] ** 2) * result.problem.step)


def morse_parameters(omega_e_cm, De_cm, mu_u):
    """Morse range parameter ``a`` (1/bohr) and anharmonicity ``x_e``."""
    we = omega_e_cm / HARTREE_TO_CM
    De = De_cm / HARTREE_TO_CM
    a = we * np.sqrt(mu_u * AMU_TO_ME / (2.0 * De))
    return a, omega_e_cm / (4.0 * De_cm)


def morse_levels(omega_e_cm, De_cm, n):
    """Analytic Morse energies above the well bottom, cm^-1."""
    v = np.asarray(n, dtype=float) + 0.5
    return omega_e_cm * v - (omega_e_cm * v) ** 2 / (4.0 * De_cm)


def _check_turning_points(grid, r_in, r_out):
    if grid[0] > r_in or grid[-1] < r_out:
        raise InvalidArgumentError(
            f"grid [{grid[0]:.4g}, {grid[-1]:.4g}] does not contain the classical "
            f"turning points [{r_in:.4g}, {r_out:.4g}]"
        )


def morse_model(Re, omega_e_cm, De_cm, mu, n_states=6, n_points=2001, r_min=None, r_max=None, margin=0.4):
    """Morse potential ``De (1 - exp(-a (R - Re)))^2`` sampled on a uniform grid.

    The default grid spans the classical turning points of state
    ``n_states - 1``, extended by ``margin`` times the classical width on
    each side. The potential is stored in cm^-1.
    """
    if min(Re, omega_e_cm, De_cm, mu) <= 0:
        raise InvalidArgumentError("Morse parameters must be positive")
    a, _ = morse_parameters(omega_e_cm, De_cm, mu)
    n_max = n_states - 1
    e_top = float(morse_levels(omega_e_cm, De_cm, n_max))
    if omega_e_cm * (n_max + 0.5) >= 2 * De_cm or e_top >= De_cm:
        raise InvalidArgumentError(f"Morse well supports fewer than {n_states} bound states")
    s = np.sqrt(e_top / De_cm)
    r_in = Re - np.log1p(s) / a
    r_out = Re - np.log1p(-s) / a
    width = r_out - r_in
    lo = r_in - margin * width if r_min is None else r_min
    hi = r_out + margin * width if r_max is None else r_max
    grid = np.linspace(lo, hi, n_points)
    _check_turning_points(grid, r_in, r_out)
    V = De_cm * (1.0 - np.exp(-a * (grid - Re))) ** 2
    return VibrationalProblem(grid, V, mu, "cm-1")


def harmonic_model(Re, omega_e_cm, mu, n_states=6, n_points=2001, margin=0.4):
    """Harmonic potential ``mu omega^2 (R - Re)^2 / 2`` in cm^-1."""
    if min(Re, omega_e_cm, mu) <= 0:
        raise InvalidArgumentError("oscillator parameters must be positive")
    we = omega_e_cm / HARTREE_TO_CM
    m = mu * AMU_TO_ME
    x_t = np.sqrt((2 * n_states - 1) / (m * we))
    half = x_t * (1 + 2 * margin)
    grid = np.linspace(Re - half, Re + half, n_points)
    V = 0.5 * m * we**2 * (grid - Re) ** 2 * HARTREE_TO_CM
    return VibrationalProblem(grid, V, mu, "cm-1")


def load_pes(path, mu):
    """Read a PES table: header ``# R_bohr V_<unit> [prop ...]`` then numeric columns."""
    with open(path) as fh:
        header = fh.readline()
    names = header.lstrip("#").split()
    if len(names) < 2 or names[0] != "R_bohr" or not names[1].startswith("V_"):
        raise InvalidArgumentError("PES header must start with 'R_bohr V_<unit>'")
    unit = names[1][2:]
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != len(names):
        raise InvalidArgumentError("PES column count does not match header")
    props = {name: data[:, i] for i, name in enumerate(names[2:], start=2)}
    return VibrationalProblem(data[:, 0], data[:, 1], mu, unit, props)
