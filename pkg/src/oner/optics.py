"""Driven, decaying electronic two-level system.

Time is in ns and all rates in GHz (1/ns). Basis ordering is ``(|g>, |e>)``.
In the frame rotating at the laser frequency the Hamiltonian is

    H = -Delta |e><e| - Omega/2 (|e><g| + |g><e|)

with Delta = omega - omega0 (angular). Decay ``|e> -> |g>`` happens at rate
Gamma and pure dephasing at rate gamma_c, so coherences decay at
``gamma_perp = Gamma/2 + gamma_c``.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .constants import OMEGA0_THZ
from .errors import ConvergenceError, IntegrationError, InvalidArgumentError
from .spin import DensityMatrix

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
PROJ_E = np.diag([0.0, 1.0]).astype(complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class TwoLevelParams:
    """Optical drive parameters.

    omega0, omega in THz (ordinary frequency); Omega, Delta angular GHz;
    Gamma, gamma_c in GHz.
    """

    Omega: float
    Gamma: float
    Delta: float = 0.0
    gamma_c: float = 0.0
    omega0: float = OMEGA0_THZ
    omega: float | None = None

    def __post_init__(self):
        if self.Gamma < 0 or self.gamma_c < 0:
            raise InvalidArgumentError("decay rates must be non-negative")
        if self.omega is None:
            # Delta (rad/ns) -> THz
            object.__setattr__(self, "omega", self.omega0 + self.Delta / (2 * np.pi) / 1e3)

    @property
    def gamma_perp(self):
        return 0.5 * self.Gamma + self.gamma_c

    def with_drive(self, Omega):
        return TwoLevelParams(Omega, self.Gamma, self.Delta, self.gamma_c, self.omega0, self.omega)


@dataclass(frozen=True)
class PulseTrain:
    """Rectangular pulse train: period ``tau`` (ns), on-fraction ``duty``."""

    tau: float
    duty: float = 0.5
    n_periods: int = 1

    def __post_init__(self):
        if self.tau <= 0:
            raise InvalidArgumentError("pulse period must be positive")
        if not 0.0 < self.duty < 1.0:
            raise InvalidArgumentError(f"duty={self.duty} outside (0, 1)")

    @property
    def rate_ghz(self):
        return 1.0 / self.tau

    @classmethod
    def from_rate_khz(cls, f_khz, duty=0.5):
        return cls(1e6 / f_khz, duty)


def steady_state(params):
    """Closed-form long-time ``(rho_ee, rho_eg)`` of the driven two-level system."""
    if params.Gamma <= 0:
        raise InvalidArgumentError("steady state requires Gamma > 0")
    gp = params.gamma_perp
    W, D = params.Omega, params.Delta
    denom = 1.0 + D**2 / gp**2 + W**2 / (gp * params.Gamma)
    rho_ee = W**2 / (2 * gp * params.Gamma) / denom
    rho_eg = 1j * W / (2 * gp) * (1 + 1j * D / gp) / denom
    return rho_ee, complex(rho_eg)


def hamiltonian(params, Omega=None):
    W = params.Omega if Omega is None else Omega
    return -params.Delta * PROJ_E - 0.5 * W * SIGMA_X


def liouvillian(params, Omega=None):
    """Row-major vectorised generator: ``d vec(rho)/dt = L vec(rho)``."""
    H = hamiltonian(params, Omega)
    eye = np.eye(2)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for rate, op in ((params.Gamma, SIGMA_MINUS), (0.5 * params.gamma_c, SIGMA_Z)):
        if rate == 0:
            continue
        ldl = op.conj().T @ op
        L = L + rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    return L


def steady_state_numeric(params):
    """Steady state from the null space of the Liouvillian (independent of the closed form)."""
    L = liouvillian(params)
    # replace one equation by the trace condition
    A = L.copy()
    A[0, :] = [1, 0, 0, 1]
    b = np.zeros(4, dtype=complex)
    b[0] = 1.0
    rho = np.linalg.solve(A, b).reshape(2, 2)
    return float(np.real(rho[1, 1])), complex(rho[1, 0])


@dataclass
class Trajectory:
    t: np.ndarray
    rho: np.ndarray  # (n, 2, 2)

    @property
    def rho_ee(self):
        return np.real(self.rho[:, 1, 1])


def _integrate(L, y0, t0, t1, t_eval, rtol, atol):
    sol = solve_ivp(
        lambda t, y: L @ y,
        (t0, t1),
        y0,
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise IntegrationError(
            f"two-level integration failed: {sol.message}",
            {"t0": t0, "t1": t1, "nfev": sol.nfev, "status": sol.status},
        )
    return sol


def lindblad_propagate(params, rho0, t_span, n_samples=201, t_eval=None, rtol=1e-9, atol=1e-12):
    """Integrate the two-level master equation from ``rho0`` over ``t_span`` (ns)."""
    if isinstance(rho0, DensityMatrix):
        rho0 = rho0.rho
    else:
        rho0 = DensityMatrix(rho0, "two-level").rho
    t0, t1 = t_span
    if t_eval is None:
        t_eval = np.linspace(t0, t1, n_samples)
    sol = _integrate(liouvillian(params), rho0.reshape(-1), t0, t1, t_eval, rtol, atol)
    rho = sol.y.T.reshape(-1, 2, 2)
    return Trajectory(sol.t, rho)


@dataclass
class OccupationWaveform:
    """One period of the excited-state occupation ``rho_ee(t)``, t in ns."""

    t: np.ndarray
    rho_ee: np.ndarray
    tau: float
    periods: int = 0
    period_mismatch: float = 0.0
    coefficients: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.rho_ee = np.asarray(self.rho_ee, dtype=float)
        if self.t.shape != self.rho_ee.shape or self.t.ndim != 1:
            raise InvalidArgumentError("waveform time and value arrays must align")
        if np.any(np.diff(self.t) < 0):
            raise InvalidArgumentError("waveform times must be non-decreasing")
        self.coefficients = fourier_coefficients(self, 1)

    @property
    def c0(self):
        return float(np.real(self.coefficients[0]))

    @property
    def c1(self):
        return complex(self.coefficients[1])

    def at(self, t):
        """Periodic linear interpolation of the waveform."""
        return np.interp(np.mod(t, self.tau), self.t, self.rho_ee)


def _lin_segment_factor(x):
    # (sin x - x cos x) / x^2, series near zero
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    exact = (np.sin(xs) - xs * np.cos(xs)) / xs**2
    return np.where(small, x / 3.0 - x**3 / 30.0, exact)


def fourier_coefficients(w, k_max):
    """Fourier coefficients ``c_0 .. c_kmax`` of a periodic waveform.

    ``c_0`` is the period average and ``c_k = (2/tau) int rho e^{-2 pi i k t/tau} dt``
    for k >= 1, so ``rho(t) = c_0 + sum_k Re(c_k e^{2 pi i k t/tau})``. The
    integral of the piecewise-linear interpolant is evaluated exactly;
    zero-length segments encode jump discontinuities.
    """
    t, y = w.t, w.rho_ee
    h = np.diff(t)
    keep = h > 0
    a, b, h = t[:-1][keep], t[1:][keep], h[keep]
    ya, yb = y[:-1][keep], y[1:][keep]
    mid = 0.5 * (a + b)
    ybar = 0.5 * (ya + yb)
    slope = (yb - ya) / h
    out = np.zeros(k_max + 1, dtype=complex)
    span = t[-1] - t[0]
    if abs(span - w.tau) > 1e-9 * w.tau:
        raise InvalidArgumentError("waveform must cover exactly one period")
    out[0] = np.sum(ybar * h) / w.tau
    for k in range(1, k_max + 1):
        om = 2 * np.pi * k / w.tau
        x = 0.5 * om * h
        seg = np.exp(-1j * om * mid) * (
            ybar * h * np.sinc(x / np.pi) - 2j * slope * (h * h / 4) * _lin_segment_factor(x)
        )
        out[k] = 2.0 * np.sum(seg) / w.tau
    return out


def square_wave_coefficients(amplitude, duty, k_max):
    """Analytic coefficients of a square wave equal to ``amplitude`` on ``[0, duty*tau)``."""
    out = np.zeros(k_max + 1, dtype=complex)
    out[0] = amplitude * duty
    for k in range(1, k_max + 1):
        out[k] = amplitude / (1j * np.pi * k) * (1 - np.exp(-2j * np.pi * k * duty))
    return out


def ideal_square_waveform(amplitude, duty, tau, n_samples=200):
    """Square-wave occupation with explicit jumps (duplicated edge times)."""
    n_on = max(2, int(round(n_samples * duty)))
    n_off = max(2, n_samples - n_on)
    t_on = np.linspace(0.0, duty * tau, n_on)
    t_off = np.linspace(duty * tau, tau, n_off)
    t = np.concatenate([t_on, t_off, [tau]])
    y = np.concatenate([np.full(n_on, amplitude), np.zeros(n_off), [amplitude]])
    return OccupationWaveform(t, y, tau)


def pulse_train_waveform(
    params,
    train,
    n_samples=400,
    tol=1e-8,
    max_periods=10_000,
    rtol=1e-9,
    atol=1e-12,
):
    """Periodic attractor of ``rho_ee(t)`` under a rectangular drive envelope.

    The drive ``Omega`` is on for ``duty*tau`` at the start of each period and
    off for the rest. Periods are propagated from the ground state until the
    state at the period boundary changes by less than ``tol`` (sup norm).
    """
    if params.Gamma * train.tau * train.duty < 10:
        warnings.warn(
            "Gamma*tau*duty < 10: occupation does not reach quasi-steady state in the on-window",
            RuntimeWarning,
            stacklevel=2,
        )
    tau, d = train.tau, train.duty
    n_on = max(3, int(round(n_samples * d)))
    n_off = max(3, n_samples - n_on + 1)
    t_on = np.linspace(0.0, d * tau, n_on)
    t_off = np.linspace(d * tau, tau, n_off)
    L_on, L_off = liouvillian(params), liouvillian(params, Omega=0.0)

    y = np.array([1, 0, 0, 0], dtype=complex)
    prev, prev_change = None, np.inf
    for period in range(1, max_periods + 1):
        s_on = _integrate(L_on, y, 0.0, d * tau, t_on, rtol, atol)
        s_off = _integrate(L_off, s_on.y[:, -1], d * tau, tau, t_off, rtol, atol)
        samples = np.concatenate([s_on.y[3].real, s_off.y[3].real[1:]])
        y_next = s_off.y[:, -1]
        change = np.max(np.abs(y_next - y))
        mismatch = np.inf if prev is None else float(np.max(np.abs(samples - prev)))
        y, prev = y_next, samples
        # this period started within tol of the previous one
        if prev_change < tol and change < tol:
            t = np.concatenate([t_on, t_off[1:]])
            return OccupationWaveform(t, samples, tau, period, mismatch)
        prev_change = change
    raise ConvergenceError(
        f"pulse-train occupation not periodic after {max_periods} periods "
        f"(last change {change:.3g}); params={params}, train={train}"
    )


def write_waveform_csv(w, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t_ns", "rho_ee"])
    for t, r in zip(w.t, w.rho_ee):
        writer.writerow([format(t, ".10g"), format(r, ".10g")])
