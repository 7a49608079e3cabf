"""Coupled ONER dynamics: nuclear spin evolution under a pulsed-laser NQI drive.

The electronic occupation ``rho_ee(t)`` modulates the NQI tensor felt by the
nucleus, ``Q(t) = Qg + rho_ee(t) (Qe - Qg)`` (off-diagonal electronic
coherences dropped). The spin evolves unitarily under

    H(t) = -gamma_n B0 Iz + I . Q^B(t) . I          (kHz, time in ms)

Because ``Q(t)`` is periodic with the pulse period ``tau``, the evolution is
generated by a single one-period propagator. ``method="floquet"`` builds it
from exact exponentials of the piecewise-constant Hamiltonian (steps never
straddle a switching edge) and advances stroboscopically; the MHz carrier
never has to be resolved, so ms-long runs at 1 T cost the same as desk runs.
``method="lab"`` integrates the lab-frame von Neumann equation with an
adaptive Runge-Kutta scheme and serves as the brute-force cross-check.
"""

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import schur
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from .constants import OMEGA_VIB_EXCITED_THZ
from .errors import FitError, IntegrationError, InvalidArgumentError, RegimeError
from .nqi import (
    amplitude,
    dc_and_harmonic_nqi,
    nqi_from_coefficients,
    rotate_to_B,
    table1_tensors,
)
from .optics import (
    PulseTrain,
    TwoLevelParams,
    ideal_square_waveform,
    pulse_train_waveform,
    steady_state,
)
from .spin import (
    DensityMatrix,
    FieldConfig,
    TransitionLine,
    build_spin_operators,
    nqi_norm,
    perturbative_transition_energies,
    quadrupole_operator,
    spin_label,
    transition_pairs,
)
from .tables import load_isotopes, load_table1

DRIVE_MODES = ("ideal-square", "simulated-waveform")


def transition_label(m_i, m_f):
    return f"{spin_label(m_i)}<->{spin_label(m_f)}"


@dataclass(frozen=True)
class OnerScenario:
    """One nucleus driven by a pulsed laser through the NQI modulation.

    ``qg``/``qe`` are E-frame tensors of the ground and excited electronic
    states. ``rho_ee`` overrides the steady-state occupation computed from
    ``optics``. ``rep_rate_khz=None`` drives the target transition at its
    first-order corrected frequency.
    """

    spin: object
    field: FieldConfig
    qg: object
    qe: object
    optics: TwoLevelParams
    duty: float = 0.5
    drive_mode: str = "ideal-square"
    target: tuple = (1.5, 0.5)
    rep_rate_khz: float | None = None
    rho_ee: float | None = None
    omega_vib_thz: float = OMEGA_VIB_EXCITED_THZ
    waveform_samples: int = 400

    def __post_init__(self):
        if self.qg.frame != "E" or self.qe.frame != "E":
            raise InvalidArgumentError("scenario tensors must be given in the E frame")
        if self.drive_mode not in DRIVE_MODES:
            raise InvalidArgumentError(f"drive_mode must be one of {DRIVE_MODES}")
        if not 0.0 < self.duty < 1.0:
            raise InvalidArgumentError(f"duty={self.duty} outside (0, 1)")
        m_i, m_f = self.target
        self.spin.index(m_i), self.spin.index(m_f)
        if round(abs(m_i - m_f)) not in (1, 2):
            raise InvalidArgumentError("target transition must have |dm| in (1, 2)")
        if self.rep_rate_khz is not None and self.rep_rate_khz <= 0:
            raise InvalidArgumentError("repetition rate must be positive")

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def rho_inf(self):
        if self.rho_ee is not None:
            return self.rho_ee
        return steady_state(self.optics)[0]

    @property
    def tensors_B(self):
        th = self.field.theta
        return rotate_to_B(self.qg, th), rotate_to_B(self.qe, th)

    def occupation(self, f_rep_khz):
        """Occupation waveform for repetition rate ``f_rep_khz`` (one period, ns)."""
        train = PulseTrain.from_rate_khz(f_rep_khz, self.duty)
        if self.drive_mode == "ideal-square":
            return ideal_square_waveform(self.rho_inf, self.duty, train.tau)
        return pulse_train_waveform(self.optics, train, n_samples=self.waveform_samples)

    def dc_harmonic(self, f_rep_khz=None):
        """B-frame ``(Q0, Q1)``: constant and first-harmonic NQI tensors."""
        if self.drive_mode == "ideal-square":
            Q0, Q1 = dc_and_harmonic_nqi(self.qg, self.qe, self.rho_inf, self.duty)
        else:
            f = self._ideal_resonance() if f_rep_khz is None else f_rep_khz
            w = self.occupation(f)
            Q0, Q1 = nqi_from_coefficients(self.qg, self.qe, w.c0, w.c1)
        th = self.field.theta
        return rotate_to_B(Q0, th), rotate_to_B(Q1, th)

    def _ideal_resonance(self):
        ideal = replace(self, drive_mode="ideal-square", rep_rate_khz=None)
        return ideal.line(*self.target).magnitude

    def lines(self, f_rep_khz=None):
        Q0, _ = self.dc_harmonic(f_rep_khz)
        return perturbative_transition_energies(self.spin, self.field, Q0)

    def line(self, m_i, m_f, f_rep_khz=None):
        for ln in self.lines(f_rep_khz):
            if ln.m_i == m_i and ln.m_f == m_f:
                return ln
        raise InvalidArgumentError(f"no transition {m_i} -> {m_f}")

    def predicted_rabi_khz(self, transition=None, f_rep_khz=None):
        """``|g|`` of the transition evaluated on the harmonic tensor ``Q1``."""
        m_i, m_f = transition or self.target
        _, Q1 = self.dc_harmonic(f_rep_khz)
        return amplitude(Q1, self.spin.I, m_i, m_f).magnitude

    @property
    def drive_rate_khz(self):
        if self.rep_rate_khz is not None:
            return self.rep_rate_khz
        return self.line(*self.target).magnitude


@dataclass
class RegimeCheck:
    name: str
    ratio: float
    relation: str  # ">>" or "~"
    status: str  # pass | warn | fail


@dataclass
class RegimeReport:
    """Scale separation of the ONER regime; scales in s^-1 as quoted (no 2 pi)."""

    scales: dict
    checks: list

    @property
    def ok(self):
        return all(c.status != "fail" for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if c.status == "fail"]

    def status(self, name):
        for c in self.checks:
            if c.name == name:
                return c.status
        raise KeyError(name)

    def __str__(self):
        return "\n".join(f"{c.status:4s}  {c.name:40s} ratio={c.ratio:.4g}" for c in self.checks)


def _much_greater(name, big, small, threshold):
    ratio = math.inf if small == 0 else big / small
    status = "pass" if ratio >= threshold else ("warn" if ratio >= 1.0 else "fail")
    return RegimeCheck(name, ratio, ">>", status)


def validate_regime(scenario, threshold=10.0):
    """Check ``omega ~ omega0 >> omega_vib >> Gamma ~ Omega >> |gamma B0| >> ||Q||``.

    Each ``>>`` passes when the ratio is at least ``threshold``, warns when the
    ordering merely holds, and fails otherwise. ``Gamma ~ Omega`` passes for a
    ratio inside ``[1/threshold, threshold]``. Laser detuning is judged against
    the vibrational spacing, since a single vibronic line must be selected.
    ``||Q||`` is the largest B-frame element of either electronic state.
    """
    opt = scenario.optics
    qgB, qeB = scenario.tensors_B
    s = {
        "omega": opt.omega * 1e12,
        "omega0": opt.omega0 * 1e12,
        "omega_vib": scenario.omega_vib_thz * 1e12,
        "Gamma": opt.Gamma * 1e9,
        "Omega": abs(opt.Omega) * 1e9,
        "zeeman": abs(scenario.spin.gamma_n * scenario.field.B0) * 1e3,
        "q_norm": max(nqi_norm(qgB), nqi_norm(qeB)) * 1e3,
    }
    ratio = s["Omega"] / s["Gamma"] if s["Gamma"] > 0 else math.inf
    band = "pass" if 1.0 / threshold <= ratio <= threshold else "fail"
    checks = [
        _much_greater("omega_vib >> |omega - omega0|", s["omega_vib"], abs(s["omega"] - s["omega0"]), threshold),
        _much_greater("omega0 >> omega_vib", s["omega0"], s["omega_vib"], threshold),
        _much_greater("omega_vib >> Gamma", s["omega_vib"], s["Gamma"], threshold),
        RegimeCheck("Gamma ~ Omega", ratio, "~", band),
        _much_greater("min(Gamma, Omega) >> |gamma_n B0|", min(s["Gamma"], s["Omega"]), s["zeeman"], threshold),
        _much_greater("|gamma_n B0| >> ||Q||", s["zeeman"], s["q_norm"], threshold),
    ]
    return RegimeReport(s, checks)


def effective_nqi_timeseries(scenario, waveform):
    """B-frame ``Q(t) = Qg + rho_ee(t) (Qe - Qg)`` on the waveform time grid.

    Returns ``(t_ns, Q)`` with ``Q`` of shape ``(n, 3, 3)``.
    """
    qgB, qeB = scenario.tensors_B
    dQ = qeB.Q - qgB.Q
    Q = qgB.Q[None] + waveform.rho_ee[:, None, None] * dQ[None]
    return waveform.t.copy(), Q


@dataclass
class SpinTrajectory:
    t: np.ndarray  # ms
    rho: np.ndarray  # (n, d, d)
    m_values: np.ndarray
    rep_rate_khz: float = 0.0

    @property
    def populations(self):
        return np.real(np.einsum("nii->ni", self.rho))

    def population(self, m):
        j = int(np.argmin(np.abs(self.m_values - m)))
        if abs(self.m_values[j] - m) > 1e-9:
            raise InvalidArgumentError(f"m={m} not in basis")
        return self.populations[:, j]

    @property
    def purity(self):
        return np.real(np.einsum("nij,nji->n", self.rho, self.rho))

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_ms"] + [f"P_{spin_label(m)}" for m in self.m_values])
        for t, p in zip(self.t, self.populations):
            writer.writerow([format(t, ".10g")] + [format(x, ".10g") for x in p])


def _hamiltonian_parts(scenario):
    ops = build_spin_operators(scenario.spin)
    qgB, qeB = scenario.tensors_B
    Hg = -scenario.spin.gamma_n * scenario.field.B0 * ops.Iz + quadrupole_operator(ops, qgB.Q)
    Hd = quadrupole_operator(ops, qeB.Q - qgB.Q)
    return Hg, Hd


def _expm_hermitian(H, dt):
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-2j * np.pi * w * dt)) @ V.conj().T


def _slices(scenario, f_rep_khz):
    """Piecewise-constant ``(occupation, duration_ms)`` slices of one period."""
    tau = 1.0 / f_rep_khz
    if scenario.drive_mode == "ideal-square":
        d = scenario.duty
        return [(scenario.rho_inf, d * tau), (0.0, (1 - d) * tau)]
    w = scenario.occupation(f_rep_khz)
    h = np.diff(w.t) * 1e-6
    rho = 0.5 * (w.rho_ee[1:] + w.rho_ee[:-1])
    keep = h > 0
    return list(zip(rho[keep], h[keep]))


def period_propagator(scenario, f_rep_khz):
    """Exact one-period propagator of the piecewise-constant spin Hamiltonian."""
    Hg, Hd = _hamiltonian_parts(scenario)
    U = np.eye(Hg.shape[0], dtype=complex)
    for rho, dt in _slices(scenario, f_rep_khz):
        U = _expm_hermitian(Hg + rho * Hd, dt) @ U
    return U


def _unitary_spectrum(U):
    T, Z = schur(U, output="complex")
    lam = np.diag(T)
    return np.angle(lam), Z


def _initial_rho(scenario, rho0):
    if rho0 is None:
        dim = scenario.spin.dim
        return DensityMatrix.basis_state(dim, scenario.spin.index(scenario.target[0])).rho
    if isinstance(rho0, DensityMatrix):
        return rho0.rho
    return DensityMatrix(rho0).rho


def _check_regime(scenario):
    report = validate_regime(scenario)
    if not report.ok:
        worst = report.failures[0]
        raise RegimeError(
            f"ONER regime violated: {worst.name} (ratio {worst.ratio:.3g}); "
            "pass enforce_regime=False to run anyway",
            ratio=worst.ratio,
        )
    return report


def evolve_spin(
    scenario,
    t_end_ms,
    *,
    method="floquet",
    rep_rate_khz=None,
    rho0=None,
    stride=None,
    max_samples=20_000,
    enforce_regime=True,
    rtol=1e-10,
    atol=1e-12,
):
    """Spin density matrix sampled stroboscopically at multiples of the pulse period."""
    if enforce_regime:
        _check_regime(scenario)
    f = rep_rate_khz or scenario.drive_rate_khz
    tau = 1.0 / f
    n_total = int(math.ceil(t_end_ms / tau - 1e-9))
    if stride is None:
        stride = max(1, int(math.ceil(n_total / max_samples)))
    n = np.arange(0, n_total + 1, stride)
    if n[-1] != n_total:
        n = np.append(n, n_total)
    r0 = _initial_rho(scenario, rho0)
    if method == "floquet":
        rho = _floquet_rho(scenario, f, r0, n)
    elif method == "lab":
        rho = _lab_rho(scenario, f, r0, n, rtol, atol)
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    return SpinTrajectory(n * tau, rho, scenario.spin.m_values, f)


def _floquet_rho(scenario, f, r0, n):
    phi, Z = _unitary_spectrum(period_propagator(scenario, f))
    M = Z.conj().T @ r0 @ Z
    ph = np.exp(1j * np.outer(n, phi))
    rho_eig = ph[:, :, None] * M[None] * ph.conj()[:, None, :]
    return np.einsum("ij,njk,lk->nil", Z, rho_eig, Z.conj())


def _lab_rho(scenario, f, r0, n, rtol, atol):
    Hg, Hd = _hamiltonian_parts(scenario)
    d = Hg.shape[0]
    slices = _slices(scenario, f)
    want = set(n.tolist())
    out = [r0.copy()] if 0 in want else []
    y = r0.reshape(-1).astype(complex)
    for period in range(1, int(n[-1]) + 1):
        for rho, dt in slices:
            H = -2j * np.pi * (Hg + rho * Hd)

            def rhs(_, v, H=H):
                r = v.reshape(d, d)
                return (H @ r - r @ H).reshape(-1)

            sol = solve_ivp(rhs, (0.0, dt), y, method="DOP853", rtol=rtol, atol=atol)
            if not sol.success:
                raise IntegrationError(
                    f"lab-frame spin integration failed: {sol.message}",
                    {"period": period, "f_rep_khz": f, "nfev": sol.nfev},
                )
            y = sol.y[:, -1]
        if period in want:
            out.append(y.reshape(d, d).copy())
    return np.array(out)


@dataclass
class RabiFit:
    frequency_khz: float
    contrast: float
    offset: float
    residual: float
    two_level: bool


def _sin2(t, f, A, C):
    return A * np.sin(np.pi * f * t) ** 2 + C


def extract_rabi(traj, m_i, m_f, residual_threshold=0.02):
    """Fit ``P_mf(t) = A sin^2(pi f t) + C`` to a trajectory.

    Raises :class:`FitError` for a flat signal or when the data cover fewer
    than two oscillation periods. ``two_level`` is False when the RMS
    residual exceeds ``residual_threshold``.
    """
    t = np.asarray(traj.t, dtype=float)
    P = traj.population(m_f) if hasattr(traj, "population") else np.asarray(traj)
    if np.ptp(P) < 1e-6:
        raise FitError(f"no oscillation in P({spin_label(m_f)}) (peak-to-peak {np.ptp(P):.2e})")
    dt = t[1] - t[0]
    spec = np.abs(np.fft.rfft(P - P.mean()))
    freqs = np.fft.rfftfreq(P.size, dt)
    f_guess = freqs[1 + np.argmax(spec[1:])]
    # scan f coarsely with (A, C) solved linearly, then refine nonlinearly
    best = None
    for f in np.linspace(0.5 * f_guess, 1.5 * f_guess, 401):
        X = np.column_stack([np.sin(np.pi * f * t) ** 2, np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(X, P, rcond=None)
        err = np.sum((X @ coef - P) ** 2)
        if best is None or err < best[0]:
            best = (err, f, coef)
    _, f0, (A0, C0) = best
    A0 = float(np.clip(A0, 0.0, 1.0))
    try:
        popt, _ = curve_fit(_sin2, t, P, p0=[f0, A0, C0], bounds=([0, 0, -1], [np.inf, 1, 1]))
    except RuntimeError as exc:
        raise FitError(f"Rabi fit did not converge: {exc}") from exc
    f, A, C = popt
    if f * t[-1] < 2.0:
        raise FitError(f"trajectory covers {f * t[-1]:.2f} < 2 oscillation periods")
    residual = float(np.sqrt(np.mean((_sin2(t, *popt) - P) ** 2)))
    return RabiFit(float(f), float(A), float(C), residual, residual <= residual_threshold)


@dataclass
class Spectrum:
    f_rep_khz: np.ndarray
    transitions: list
    max_transfer: np.ndarray  # (n_points, n_transitions)
    lines: list = field(default_factory=list)

    @property
    def labels(self):
        return [transition_label(*tr) for tr in self.transitions]

    @property
    def step(self):
        return float(self.f_rep_khz[1] - self.f_rep_khz[0]) if self.f_rep_khz.size > 1 else 0.0

    def column(self, transition):
        return self.max_transfer[:, self.transitions.index(tuple(transition))]

    def rows(self):
        for i, f in enumerate(self.f_rep_khz):
            for j, lab in enumerate(self.labels):
                yield f, lab, self.max_transfer[i, j]

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["f_rep_khz", "transition_label", "max_transfer"])
        for f, lab, p in self.rows():
            writer.writerow([format(f, ".10g"), lab, format(p, ".10g")])


def _scan_point(args):
    scenario, f, transitions, t_probe_ms = args
    phi, Z = _unitary_spectrum(period_propagator(scenario, f))
    n = np.arange(int(math.ceil(t_probe_ms * f - 1e-9)) + 1)
    ph = np.exp(1j * np.outer(n, phi))
    out = np.empty(len(transitions))
    for k, (m_i, m_f) in enumerate(transitions):
        i, j = scenario.spin.index(m_i), scenario.spin.index(m_f)
        amp = ph @ (Z[j, :] * Z[i, :].conj())
        out[k] = np.max(np.abs(amp) ** 2)
    return out


def scan_repetition_rate(
    scenario,
    f_range,
    n_points,
    t_probe_ms,
    transitions=None,
    workers=1,
    enforce_regime=True,
):
    """Maximum population transfer per transition versus repetition rate.

    Each point starts in ``|m_i>`` and records ``max_t P_mf(t)`` for
    ``t <= t_probe_ms`` (sampled once per pulse period). Points are
    independent; ``workers > 1`` evaluates them in separate processes with
    results identical to a serial run.
    """
    if enforce_regime:
        _check_regime(scenario)
    lo, hi = f_range
    if not 0 < lo < hi or n_points < 2:
        raise InvalidArgumentError("scan range must satisfy 0 < lo < hi with n_points >= 2")
    if transitions is None:
        transitions = transition_pairs(scenario.spin.I)
    transitions = [tuple(tr) for tr in transitions]
    freqs = np.linspace(lo, hi, n_points)
    jobs = [(scenario, f, transitions, t_probe_ms) for f in freqs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_point, jobs))
    else:
        results = [_scan_point(job) for job in jobs]
    return Spectrum(freqs, transitions, np.array(results), scenario.lines(0.5 * (lo + hi)))


@dataclass
class Peak:
    transition: str
    f_rep_khz: float
    transfer: float
    kind: str  # line | harmonic-k | unassigned
    predicted_khz: float | None


def find_resonances(spectrum, threshold=0.5, max_harmonic=5):
    """Locate transfer peaks and assign them to lines or drive harmonics.

    A peak within one scan step of ``f_line / k`` (k >= 2) is labelled
    ``harmonic-k``: the k-th harmonic of the square-wave drive is resonant.
    """
    step = spectrum.step
    predicted = {transition_label(ln.m_i, ln.m_f): ln.magnitude for ln in spectrum.lines}
    peaks = []
    for j, lab in enumerate(spectrum.labels):
        col = spectrum.max_transfer[:, j]
        idx, _ = find_peaks(np.concatenate([[0.0], col, [0.0]]), height=threshold)
        for i in idx - 1:
            f = float(spectrum.f_rep_khz[i])
            line = predicted.get(lab)
            kind = "unassigned"
            if line is not None:
                if abs(f - line) <= step:
                    kind = "line"
                else:
                    for k in range(2, max_harmonic + 1):
                        if abs(f - line / k) <= step:
                            kind = f"harmonic-{k}"
                            break
            peaks.append(Peak(lab, f, float(col[i]), kind, line))
    return peaks


def lina_scenario(
    isotope="Li-7",
    profile="paper",
    B=1.0,
    theta=np.pi / 4,
    optics=None,
    zeeman_over_rabi=200.0,
    min_zeeman_over_q=20.0,
    **kwargs,
):
    """Scenario for one LiNa nucleus from the bundled tables.

    ``profile="paper"`` keeps ``B`` as given. ``profile="desk"`` rescales B so
    that ``|gamma_n B| = zeeman_over_rabi * |g|`` for the target transition,
    which keeps lab-frame brute-force integration affordable. The Zeeman
    splitting is floored at ``min_zeeman_over_q * ||Q||`` so the scale
    ordering of the ONER regime survives the rescaling.
    """
    spec = load_isotopes()[isotope]
    qg, qe = table1_tensors(load_table1(), isotope)
    optics = optics or TwoLevelParams(Omega=1.0, Gamma=1.0)
    sc = OnerScenario(spec, FieldConfig(B, theta), qg, qe, optics, **kwargs)
    if profile == "paper":
        return sc
    if profile != "desk":
        raise InvalidArgumentError(f"unknown profile {profile!r}")
    g = sc.predicted_rabi_khz()
    if g == 0:
        warnings.warn("target transition has zero coupling; keeping B", RuntimeWarning, stacklevel=2)
        return sc
    qgB, qeB = sc.tensors_B
    zeeman = max(zeeman_over_rabi * g, min_zeeman_over_q * max(nqi_norm(qgB), nqi_norm(qeB)))
    return sc.replace(field=FieldConfig(float(zeeman / abs(spec.gamma_n)), theta))
