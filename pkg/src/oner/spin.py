"""Spin operators, the static Zeeman + quadrupole Hamiltonian and its levels.

Conventions
-----------
- Basis ordering is ``|m> = |I>, |I-1>, ..., |-I>`` so ``Iz`` is diagonal and
  decreasing.
- Hamiltonian matrix elements are energies divided by h, in kHz.
- The Zeeman term is ``-gamma_n * B0 * Iz``; with ``gamma_n > 0`` the energy
  decreases with m.
"""

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidArgumentError, RegimeError, RegimeWarning, UnsupportedSpinError

HERMITIAN_TOL = 1e-10
REGIME_HARD = 10.0
REGIME_SOFT = 100.0


def _check_spin(I):
    two_i = 2.0 * I
    if two_i < 1 or abs(two_i - round(two_i)) > 1e-12:
        raise InvalidArgumentError(f"spin I={I} is not a positive half-integer")
    return round(two_i)


def spin_label(m):
    """Format a projection quantum number as a fraction, e.g. ``-3/2``."""
    return str(Fraction(m).limit_denominator(2))


@dataclass(frozen=True)
class SpinSpec:
    """Isotope identity: spin, gyromagnetic ratio (kHz/T), quadrupole moment (barn)."""

    I: float
    gamma_n: float
    q_moment: float = 0.0
    label: str = ""
    mass_u: float | None = None

    def __post_init__(self):
        _check_spin(self.I)

    @property
    def dim(self):
        return round(2 * self.I) + 1

    @property
    def m_values(self):
        return self.I - np.arange(self.dim)

    @property
    def has_quadrupole(self):
        return self.I >= 1

    def index(self, m):
        """Row index of ``|m>`` in the basis."""
        j = self.I - m
        if abs(j - round(j)) > 1e-9 or not 0 <= round(j) < self.dim:
            raise InvalidArgumentError(f"m={m} is not a projection of I={self.I}")
        return round(j)


@dataclass(frozen=True)
class FieldConfig:
    """Static field B0 (Tesla, along z of the B frame) and E/B frame angle theta (rad)."""

    B0: float
    theta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi + 1e-12:
            raise InvalidArgumentError(f"theta={self.theta} outside [0, pi]")
        if self.B0 < 0:
            raise InvalidArgumentError("B0 must be non-negative")


@dataclass(frozen=True)
class SpinOperators:
    Ix: np.ndarray
    Iy: np.ndarray
    Iz: np.ndarray

    @property
    def dimension(self):
        return self.Iz.shape[0]

    @property
    def vector(self):
        return (self.Ix, self.Iy, self.Iz)

    @property
    def Ip(self):
        return self.Ix + 1j * self.Iy

    @property
    def Im(self):
        return self.Ix - 1j * self.Iy


def build_spin_operators(spec):
    """Angular momentum matrices for spin ``spec.I`` (or a bare number).

    The raising operator is built from the ladder coefficients
    ``sqrt(I(I+1) - m(m+1))``; ``Ix`` and ``Iy`` follow from ``I+`` and ``I-``.
    """
    I = spec.I if isinstance(spec, SpinSpec) else float(spec)
    _check_spin(I)
    m = I - np.arange(round(2 * I) + 1)
    # <m+1| I+ |m> sits one row above the diagonal in the descending basis
    ladder = np.sqrt(I * (I + 1) - m[1:] * (m[1:] + 1))
    Ip = np.diag(ladder, k=1).astype(complex)
    Im = Ip.conj().T
    return SpinOperators(
        Ix=0.5 * (Ip + Im),
        Iy=-0.5j * (Ip - Im),
        Iz=np.diag(m).astype(complex),
    )


def quadrupole_operator(ops, Q):
    """Return ``sum_{mu,nu} Q_mu,nu I_mu I_nu`` for a 3x3 tensor array ``Q``."""
    vec = ops.vector
    H = np.zeros_like(ops.Iz)
    for a in range(3):
        for b in range(3):
            if Q[a, b] != 0.0:
                H = H + Q[a, b] * (vec[a] @ vec[b])
    return H


def build_hamiltonian(spec, field, Q=None):
    """Static spin Hamiltonian ``-gamma_n B0 Iz + I.Q.I`` in kHz.

    ``Q`` must be an :class:`~oner.nqi.NqiTensor` in the B frame (or None).
    For I = 1/2 a traceless ``Q`` contributes identically zero.
    """
    ops = build_spin_operators(spec)
    H = -spec.gamma_n * field.B0 * ops.Iz
    if Q is not None:
        if getattr(Q, "frame", None) != "B":
            raise InvalidArgumentError("quadrupole tensor must be given in the B frame")
        H = H + quadrupole_operator(ops, Q.Q)
    return H


def exact_levels(H):
    """Eigenvalues (ascending) and the unitary eigenvector matrix of Hermitian ``H``."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidArgumentError("Hamiltonian must be a square matrix")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise InvalidArgumentError("Hamiltonian is not Hermitian")
    return np.linalg.eigh(H)


@dataclass(frozen=True)
class TransitionLine:
    """Transition ``m_i <-> m_f`` with ``m_f = m_i - dm``.

    ``energy`` is the signed ``E(m_i) - E(m_f)`` in kHz, ``zeeman`` its
    ``-dm * gamma_n * B0`` part and ``correction`` the quadrupole shift.
    """

    m_i: float
    m_f: float
    energy: float
    zeeman: float = 0.0
    correction: float = 0.0

    @property
    def dm(self):
        return round(self.m_i - self.m_f)

    @property
    def magnitude(self):
        return abs(self.energy)

    @property
    def label(self):
        return f"{spin_label(self.m_i)}<->{spin_label(self.m_f)}"


def transition_pairs(I, orders=(1, 2)):
    """All ``(m, m - dm)`` pairs for ``dm`` in ``orders``, highest m first."""
    pairs = []
    for dm in orders:
        m = I
        while m - dm >= -I - 1e-12:
            pairs.append((m, m - dm))
            m -= 1
    return pairs


def nqi_norm(Q):
    """Largest absolute tensor element, ``max_{mu,nu} |Q_mu,nu|``."""
    arr = Q.Q if hasattr(Q, "Q") else np.asarray(Q)
    return float(np.max(np.abs(arr)))


def perturbative_transition_energies(spec, field, Q0=None):
    """First-order corrected transition energies (kHz).

    ``dE(m-1 -> m) = -gamma B0 + 3/2 (2m - 1) Q_zz`` and
    ``dE(m-2 -> m) = -2 gamma B0 + 3/2 (4m - 4) Q_zz``, with ``Q_zz`` taken
    from the B-frame tensor ``Q0``.

    Raises :class:`RegimeError` when ``|gamma B0| / ||Q0|| < 10`` and warns
    below 100.
    """
    qzz = 0.0
    if Q0 is not None:
        if Q0.frame != "B":
            raise InvalidArgumentError("Q0 must be in the B frame")
        zeeman = abs(spec.gamma_n * field.B0)
        norm = nqi_norm(Q0)
        ratio = np.inf if norm == 0 else zeeman / norm
        if ratio < REGIME_HARD:
            raise RegimeError(
                f"Zeeman/quadrupole ratio {ratio:.3g} < {REGIME_HARD}; "
                "first-order energies are not valid",
                ratio=ratio,
            )
        if ratio < REGIME_SOFT:
            warnings.warn(
                f"Zeeman/quadrupole ratio {ratio:.3g} below {REGIME_SOFT}",
                RegimeWarning,
                stacklevel=2,
            )
        qzz = float(Q0.Q[2, 2])

    lines = []
    for m, mf in transition_pairs(spec.I):
        dm = round(m - mf)
        zee = -dm * spec.gamma_n * field.B0
        # E_Q(m) = 3/2 Q_zz m^2 + const at first order
        corr = 1.5 * qzz * (m * m - mf * mf)
        lines.append(TransitionLine(m, mf, zee + corr, zee, corr))
    return lines


def label_eigenstates(spec, vecs):
    """Assign each eigenvector the m of its dominant ``|m>`` component."""
    weights = np.abs(vecs) ** 2
    idx = np.argmax(weights, axis=0)
    if len(set(idx.tolist())) != len(idx):
        raise InvalidArgumentError("eigenstates cannot be labelled uniquely by m")
    return spec.m_values[idx]


def exact_transition_energies(spec, field, Q=None):
    """Transition energies from exact diagonalisation, labelled by dominant m."""
    vals, vecs = exact_levels(build_hamiltonian(spec, field, Q))
    labels = label_eigenstates(spec, vecs)
    energy = {round(2 * m): e for m, e in zip(labels, vals)}
    lines = []
    for m, mf in transition_pairs(spec.I):
        e = energy[round(2 * m)] - energy[round(2 * mf)]
        zee = -round(m - mf) * spec.gamma_n * field.B0
        lines.append(TransitionLine(m, mf, e, zee, e - zee))
    return lines


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite density matrix.

    ``basis`` is ``"spin"`` (ordering ``|I> ... |-I>``) or ``"two-level"``
    (ordering ``|g>, |e>``).
    """

    rho: np.ndarray
    basis: str = "spin"
    herm_tol: float = field(default=1e-12, repr=False)
    trace_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidArgumentError("density matrix must be square")
        if self.basis not in ("spin", "two-level"):
            raise InvalidArgumentError(f"unknown basis {self.basis!r}")
        if np.max(np.abs(rho - rho.conj().T)) > self.herm_tol:
            raise InvalidArgumentError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > self.trace_tol:
            raise InvalidArgumentError("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(rho)) < -self.trace_tol:
            raise InvalidArgumentError("density matrix has negative eigenvalues")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, state, basis="spin"):
        psi = np.asarray(state, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), basis)

    @classmethod
    def basis_state(cls, dim, index, basis="spin"):
        psi = np.zeros(dim, dtype=complex)
        psi[index] = 1.0
        return cls.pure(psi, basis)

    @property
    def populations(self):
        return np.real(np.diag(self.rho)).copy()

    @property
    def purity(self):
        return float(np.real(np.trace(self.rho @ self.rho)))
