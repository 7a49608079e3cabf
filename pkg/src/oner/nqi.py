"""EFG and NQI tensor algebra.

Tensors are 3x3 real symmetric traceless matrices tagged with the frame they
are expressed in: ``"E"`` (molecular axis along z) or ``"B"`` (static magnetic
field along z). NQI tensors are in kHz (E/h).
"""

from dataclasses import dataclass

import numpy as np

from .constants import KHZ_PER_BARN_AU
from .errors import InvalidArgumentError, UnsupportedSpinError
from .spin import (
    FieldConfig,
    perturbative_transition_energies,
    spin_label,
    transition_pairs,
)

FRAMES = ("E", "B")


def _validated(arr, frame):
    arr = np.array(arr, dtype=float)
    if arr.shape != (3, 3):
        raise InvalidArgumentError(f"tensor must be 3x3, got {arr.shape}")
    if frame not in FRAMES:
        raise InvalidArgumentError(f"unknown frame {frame!r}")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.T)) > 1e-12 * scale:
        raise InvalidArgumentError("tensor is not symmetric")
    if abs(np.trace(arr)) > 1e-10 * scale:
        raise InvalidArgumentError("tensor is not traceless")
    arr = 0.5 * (arr + arr.T)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EfgTensor:
    """Electric field gradient in atomic units."""

    phi: np.ndarray
    frame: str = "E"

    def __post_init__(self):
        object.__setattr__(self, "phi", _validated(self.phi, self.frame))


@dataclass(frozen=True)
class NqiTensor:
    """Nuclear quadrupole interaction tensor in kHz.

    ``kind`` records provenance: ``ground``, ``excited``, ``DC``,
    ``harmonic``, ``difference`` or ``generic``.
    """

    Q: np.ndarray
    frame: str = "E"
    kind: str = "generic"

    def __post_init__(self):
        object.__setattr__(self, "Q", _validated(self.Q, self.frame))

    @classmethod
    def cylindrical(cls, qzz, frame="E", kind="generic"):
        return cls(np.diag([-0.5 * qzz, -0.5 * qzz, qzz]), frame, kind)

    @property
    def is_cylindrical(self):
        q = self.Q
        off = q - np.diag(np.diag(q))
        scale = max(1.0, float(np.max(np.abs(q))))
        return np.max(np.abs(off)) <= 1e-12 * scale and abs(q[0, 0] - q[1, 1]) <= 1e-12 * scale

    @property
    def zz(self):
        return float(self.Q[2, 2])

    def _same_frame(self, other):
        if self.frame != other.frame:
            raise InvalidArgumentError(f"frame mismatch: {self.frame} vs {other.frame}")

    def __add__(self, other):
        self._same_frame(other)
        return NqiTensor(self.Q + other.Q, self.frame)

    def __sub__(self, other):
        self._same_frame(other)
        return NqiTensor(self.Q - other.Q, self.frame, "difference")

    def scaled(self, factor, kind=None):
        return NqiTensor(factor * self.Q, self.frame, kind or self.kind)

    def with_kind(self, kind):
        return NqiTensor(self.Q, self.frame, kind)


def efg_to_nqi(phi, spec):
    """Convert an EFG tensor (a.u.) to the NQI tensor ``q/(2I(2I-1)) Phi`` in kHz."""
    if not spec.has_quadrupole:
        raise UnsupportedSpinError(f"I={spec.I} has no quadrupole coupling")
    pref = spec.q_moment / (2 * spec.I * (2 * spec.I - 1))
    return NqiTensor(pref * KHZ_PER_BARN_AU * phi.phi, phi.frame)


def rotation_matrix(theta):
    """Rotation by ``theta`` about the y axis shared by the E and B frames."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotate_tensor(Q, theta):
    R = rotation_matrix(theta)
    return R @ np.asarray(Q) @ R.T


def rotate_to_B(Q, theta):
    """Express an E-frame tensor in the B frame: ``R(theta) Q R(theta)^T``."""
    if Q.frame != "E":
        raise InvalidArgumentError("rotate_to_B expects an E-frame tensor")
    return NqiTensor(rotate_tensor(Q.Q, theta), "B", Q.kind)


def dc_and_harmonic_nqi(Qg, Qe, rho_ee_inf, duty=0.5):
    """Constant and first-harmonic NQI tensors of a square-wave occupation.

    The occupation alternates between ``rho_ee_inf`` (fraction ``duty`` of the
    period) and 0. Returns ``(Q0, Q1)`` with ``Q0 = Qg + duty*rho*dQ`` and
    ``Q1 = (2 rho / pi) sin(pi duty) dQ`` where ``dQ = Qe - Qg``.
    """
    if not 0.0 <= rho_ee_inf <= 0.5:
        raise InvalidArgumentError(f"rho_ee={rho_ee_inf} outside [0, 1/2]")
    if not 0.0 < duty < 1.0:
        raise InvalidArgumentError(f"duty={duty} outside (0, 1)")
    c0 = duty * rho_ee_inf
    c1 = 2.0 * rho_ee_inf / np.pi * np.sin(np.pi * duty)
    return nqi_from_coefficients(Qg, Qe, c0, c1)


def nqi_from_coefficients(Qg, Qe, c0, c1):
    """``(Qg + c0*dQ, |c1|*dQ)`` for occupation Fourier coefficients c0, c1."""
    dQ = Qe - Qg
    Q0 = (Qg.Q + c0 * dQ.Q)
    return NqiTensor(Q0, Qg.frame, "DC"), dQ.scaled(abs(c1), "harmonic")


@dataclass(frozen=True)
class TransitionAmplitude:
    m_i: float
    m_f: float
    g: complex
    kind: str
    coefficient: float

    @property
    def magnitude(self):
        return abs(self.g)


def _check_m(I, m, dm):
    j = I - m
    if abs(j - round(j)) > 1e-9 or m > I + 1e-12 or m - dm < -I - 1e-12:
        raise InvalidArgumentError(f"no m={m} -> m-{dm} transition for I={I}")


def alpha_coefficient(I, m):
    return 0.5 * abs(2 * m - 1) * np.sqrt(I * (I + 1) - m * (m - 1))


def beta_coefficient(I, m):
    return 0.25 * np.sqrt(I * (I + 1) - (m - 1) * (m - 2)) * np.sqrt(I * (I + 1) - m * (m - 1))


def _require_B(Q):
    if Q.frame != "B":
        raise InvalidArgumentError("transition amplitudes need a B-frame tensor")


def amplitude_single(Q, I, m):
    """Amplitude for ``m -> m-1``: ``alpha (Q_xz + i Q_yz)`` in kHz."""
    _require_B(Q)
    _check_m(I, m, 1)
    a = alpha_coefficient(I, m)
    return TransitionAmplitude(m, m - 1, a * (Q.Q[0, 2] + 1j * Q.Q[1, 2]), "single", a)


def amplitude_double(Q, I, m):
    """Amplitude for ``m -> m-2``: ``beta (Q_xx - Q_yy + 2i Q_yx)`` in kHz."""
    _require_B(Q)
    _check_m(I, m, 2)
    b = beta_coefficient(I, m)
    q = Q.Q
    return TransitionAmplitude(m, m - 2, b * (q[0, 0] - q[1, 1] + 2j * q[1, 0]), "double", b)


def amplitude(Q, I, m_i, m_f):
    dm = round(m_i - m_f)
    if dm == 1:
        return amplitude_single(Q, I, m_i)
    if dm == 2:
        return amplitude_double(Q, I, m_i)
    raise InvalidArgumentError(f"only |dm| in (1, 2) is quadrupole-allowed, got {dm}")


def table1_tensors(table1, isotope):
    """Ground- and excited-state E-frame tensors for ``isotope``."""
    try:
        qg = table1[("g", isotope)]
        qe = table1[("e", isotope)]
    except KeyError as exc:
        raise InvalidArgumentError(f"no NQI data for {isotope}") from exc
    return (
        NqiTensor.cylindrical(qg, "E", "ground"),
        NqiTensor.cylindrical(qe, "E", "excited"),
    )


@dataclass(frozen=True)
class Table2Row:
    isotope: str
    m_i: float
    m_f: float
    zeeman_khz: float
    correction_khz: float
    energy_khz: float
    rabi_khz: float
    allowed: bool

    @property
    def label(self):
        return f"{spin_label(self.m_i)}<->{spin_label(self.m_f)}"


def generate_table2(isotopes, table1, B, theta, rho_ee, duty=0.5, include_forbidden=False):
    """Corrected transition energies and spin Rabi frequencies per isotope.

    Energies use the DC tensor ``Q0`` rotated into the B frame; Rabi
    frequencies are ``|g|`` evaluated on the rotated harmonic tensor ``Q1``.
    """
    field = FieldConfig(B, theta)
    rows = []
    for label, spec in isotopes.items():
        if not any(k[1] == label for k in table1):
            continue
        Qg, Qe = table1_tensors(table1, label)
        Q0, Q1 = dc_and_harmonic_nqi(Qg, Qe, rho_ee, duty)
        Q0B, Q1B = rotate_to_B(Q0, theta), rotate_to_B(Q1, theta)
        for line in perturbative_transition_energies(spec, field, Q0B):
            amp = amplitude(Q1B, spec.I, line.m_i, line.m_f)
            allowed = amp.coefficient > 0
            if not allowed and not include_forbidden:
                continue
            rows.append(
                Table2Row(
                    isotope=label,
                    m_i=line.m_i,
                    m_f=line.m_f,
                    zeeman_khz=abs(line.zeeman),
                    correction_khz=line.correction,
                    energy_khz=line.magnitude,
                    rabi_khz=amp.magnitude,
                    allowed=allowed,
                )
            )
    return rows


def rabi_prefactor(spec, Qg, Qe, dm=1, duty=0.5):
    """Spin Rabi frequency per unit ``rho_ee`` and angular factor (kHz).

    The angular factor is ``sin(2 theta)`` for dm=1 and ``sin^2 theta`` for
    dm=2; the prefactor is evaluated where that factor equals one.
    """
    theta = np.pi / 4 if dm == 1 else np.pi / 2
    rho = 0.5
    _, Q1 = dc_and_harmonic_nqi(Qg, Qe, rho, duty)
    amp = amplitude(rotate_to_B(Q1, theta), spec.I, spec.I, spec.I - dm)
    return amp.magnitude / rho
