"""Physical constants and unit conversions (CODATA values via scipy)."""

import scipy.constants as sc

# kHz per (barn * atomic unit of EFG): e * Q * Phi / h
EFG_AU = sc.physical_constants["atomic unit of electric field gradient"][0]
KHZ_PER_BARN_AU = sc.e * 1e-28 * EFG_AU / sc.h / 1e3

HARTREE_TO_CM = sc.physical_constants["hartree-inverse meter relationship"][0] / 100.0
AMU_TO_ME = sc.physical_constants["atomic mass constant"][0] / sc.m_e
CM_TO_THZ = sc.c * 100.0 / 1e12

# 7Li 23Na reduced mass from AME2020 atomic masses (see data/isotopes.txt).
MASS_LI7_U = 7.0160034366
MASS_NA23_U = 22.9897692820
MU_LINA_U = MASS_LI7_U * MASS_NA23_U / (MASS_LI7_U + MASS_NA23_U)

# LiNa molecular parameters used as defaults.
OMEGA0_THZ = 459.87  # vibrationally corrected X(v=0) -> A(v=0) transition
RE_GROUND_BOHR = 5.48
RE_EXCITED_BOHR = 6.22
OMEGA_E_GROUND_CM = 249.0
OMEGA_E_EXCITED_CM = 212.0
OMEGA_VIB_GROUND_THZ = 7.46
OMEGA_VIB_EXCITED_THZ = 6.35
# Morse well depths are modelling parameters; no potential curve is published.
DE_GROUND_CM = 7100.0
DE_EXCITED_CM = 8700.0
