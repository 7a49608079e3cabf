"""Acceptance gate.

Each criterion prints a single ``[Cn] PASS|FAIL`` line (also collected into
the terminal summary) and then asserts at its stated tolerance.
"""

import itertools

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oner.constants import (
    DE_EXCITED_CM,
    MU_LINA_U,
    OMEGA_E_EXCITED_CM,
    OMEGA_E_GROUND_CM,
    RE_EXCITED_BOHR,
    RE_GROUND_BOHR,
)
from oner.dynamics import evolve_spin, extract_rabi, find_resonances, lina_scenario, scan_repetition_rate
from oner.nqi import NqiTensor, generate_table2, rabi_prefactor, rotate_to_B, table1_tensors
from oner.optics import (
    PulseTrain,
    TwoLevelParams,
    ideal_square_waveform,
    lindblad_propagate,
    pulse_train_waveform,
    square_wave_coefficients,
    steady_state,
)
from oner.spin import DensityMatrix, FieldConfig, exact_transition_energies, perturbative_transition_energies
from oner.tables import load_isotopes, load_table1
from oner.vibration import harmonic_model, morse_levels, morse_model, solve_vibrational

ISOTOPES = load_isotopes()
TABLE1 = load_table1()


def verdict(criterion, checks):
    """Print one line for ``criterion``; ``checks`` maps description -> (ok, detail)."""
    ok = all(c[0] for c in checks.values())
    detail = "; ".join(f"{k}: {v[1]}" + ("" if v[0] else " <- FAIL") for k, v in checks.items())
    line = f"[{criterion}] {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def within(value, target, tol):
    return abs(value - target) <= tol, f"{value:.6g} vs {target:.6g} (tol {tol:g})"


def test_c1_rabi_prefactors():
    checks = {}
    for iso, target in (("Li-7", 20.2), ("Na-23", 247.6)):
        qg, qe = table1_tensors(TABLE1, iso)
        checks[f"{iso} prefactor kHz"] = within(rabi_prefactor(ISOTOPES[iso], qg, qe), target, 0.05)
    verdict("C1", checks)


def test_c2_zeeman_lines():
    rows = generate_table2(ISOTOPES, TABLE1, 1.0, np.pi / 4, 0.5)
    expected = {
        ("Li-7", 1): 24822.4,
        ("Li-7", 2): 49644.8,
        ("Na-23", 1): 16903.3,
        ("Na-23", 2): 33806.6,
    }
    zeeman_err = max(abs(abs(r.zeeman_khz) - expected[(r.isotope, round(abs(r.m_i - r.m_f)))]) for r in rows)
    energies = [abs(r.energy_khz) for r in rows]
    checks = {
        f"{len(rows)} Zeeman lines per tesla": (zeeman_err <= 0.1, f"max |diff| {zeeman_err:.2e} kHz"),
        "16-50 MHz window at 1 T": (
            all(16000 <= e <= 50000 for e in energies),
            f"{min(energies):.1f} to {max(energies):.1f} kHz",
        ),
    }
    verdict("C2", checks)


def test_c3_steady_state_vs_lindblad():
    grid = list(
        itertools.product(
            (0.2, 1.0, 2.5, 5.0, 9.0),  # Omega
            (-4.0, -1.0, 0.0, 0.7, 3.0),  # Delta
            (0.5, 1.0, 3.0),  # Gamma
            (0.0, 0.4, 2.0),  # gamma_c
        )
    )
    ground = DensityMatrix.basis_state(2, 0, "two-level")
    worst = 0.0
    for W, D, G, gc in grid:
        p = TwoLevelParams(Omega=W, Gamma=G, Delta=D, gamma_c=gc)
        slowest = min(G, p.gamma_perp)
        tr = lindblad_propagate(p, ground, (0, 40.0 / slowest), n_samples=2)
        worst = max(worst, abs(tr.rho_ee[-1] - steady_state(p)[0]))
    closed = TwoLevelParams(Omega=1.7, Gamma=0.0)
    tr = lindblad_propagate(closed, ground, (0, 12.0), n_samples=241)
    rabi_err = np.max(np.abs(tr.rho_ee - np.sin(1.7 * tr.t / 2) ** 2))
    verdict(
        "C3",
        {
            f"grid of {len(grid)} points": (len(grid) >= 125 and worst < 1e-6, f"max |diff| {worst:.2e}"),
            "closed-system Rabi": (rabi_err < 1e-6, f"max |diff| {rabi_err:.2e}"),
        },
    )


@pytest.mark.filterwarnings("ignore::oner.errors.RegimeWarning")  # the largest scale leaves the weak-NQI regime on purpose
def test_c4_perturbation_quadratic_scaling():
    spec = ISOTOPES["Na-23"]
    field = FieldConfig(1.0, np.pi / 4)
    _, qe = table1_tensors(TABLE1, "Na-23")
    base = rotate_to_B(qe, np.pi / 4).Q
    scales = 2.0 ** -np.arange(5)  # four octaves
    errs = []
    for s in scales:
        Q = NqiTensor(s * base, "B")
        pert = perturbative_transition_energies(spec, field, Q)
        exact = exact_transition_energies(spec, field, Q)
        errs.append(max(abs(p.magnitude - e.magnitude) for p, e in zip(pert, exact)))
    slope = np.polyfit(np.log(scales), np.log(errs), 1)[0]
    verdict("C4", {"log-log slope": within(slope, 2.0, 0.15)})


def test_c5_square_wave_factors():
    p = TwoLevelParams(Omega=1.0, Gamma=1.0)
    rho = steady_state(p)[0]
    exact = square_wave_coefficients(rho, 0.5, 1)
    numeric = ideal_square_waveform(rho, 0.5, 10.0).coefficients
    tau = 40.0  # Gamma * tau * duty = 20
    sim = pulse_train_waveform(p, PulseTrain(tau=tau, duty=0.5))
    verdict(
        "C5",
        {
            "analytic c0": within(abs(exact[0]), rho / 2, 1e-10),
            "analytic |c1|": within(abs(exact[1]), 2 * rho / np.pi, 1e-10),
            "sampled square wave c0": within(abs(numeric[0]), rho / 2, 1e-10),
            "sampled square wave |c1|": within(abs(numeric[1]), 2 * rho / np.pi, 1e-10),
            "simulated c0": within(sim.c0, rho / 2, 0.02 * rho / 2),
            "simulated |c1|": within(abs(sim.c1), 2 * rho / np.pi, 0.02 * 2 * rho / np.pi),
        },
    )


@pytest.mark.slow
def test_c6_full_dynamics_resonance():
    sc = lina_scenario("Li-7", "desk", zeeman_over_rabi=200.0)
    g = sc.predicted_rabi_khz()
    traj = evolve_spin(sc, 3.0 / g)
    fit = extract_rabi(traj, 1.5, 0.5)
    lab = evolve_spin(sc, 3.0 / g, stride=40, method="lab")
    fast = evolve_spin(sc, 3.0 / g, stride=40)
    cross = np.max(np.abs(fast.populations - lab.populations))

    single = [ln.magnitude for ln in sc.lines() if ln.dm == 1]
    spec = scan_repetition_rate(sc, (min(single) - 4 * g, max(single) + 4 * g), 161, 1.0 / g)
    peaks = {p.transition: p for p in find_resonances(spec) if p.kind == "line"}
    checks = {
        "fitted Rabi vs |g|": within(fit.frequency_khz, g, 0.02 * g),
        "floquet vs lab brute force": (cross < 1e-6, f"max |dP| {cross:.1e}"),
    }
    for m_i, m_f in ((1.5, 0.5), (-0.5, -1.5)):
        ln = sc.line(m_i, m_f)
        pk = peaks.get(ln.label)
        if pk is None:
            checks[f"{ln.label} peak"] = (False, "no peak found")
            continue
        checks[f"{ln.label} peak at corrected line"] = within(pk.f_rep_khz, ln.magnitude, spec.step)
        checks[f"{ln.label} resolved from bare Zeeman"] = (
            abs(pk.f_rep_khz - abs(ln.zeeman)) > spec.step,
            f"offset {pk.f_rep_khz - abs(ln.zeeman):+.3f} kHz",
        )
    forbidden = np.max(spec.column((0.5, -0.5)))
    checks["1/2<->-1/2 transfer"] = (forbidden < 1e-3, f"{forbidden:.1e}")
    flat = scan_repetition_rate(sc.replace(field=FieldConfig(sc.field.B0, 0.0)), spec.f_rep_khz[[0, -1]], 41, 1.0 / g)
    zero = np.max(flat.max_transfer)
    checks["theta=0 transfer"] = (zero < 1e-12, f"{zero:.1e}")
    verdict("C6", checks)


def test_c7_vibrational_solver():
    checks = {}
    we, De, mu = OMEGA_E_EXCITED_CM, DE_EXCITED_CM, MU_LINA_U
    morse = solve_vibrational(morse_model(RE_EXCITED_BOHR, we, De, mu), 6)
    rel = np.abs(morse.energies[:3] - morse_levels(we, De, np.arange(3))) / morse_levels(we, De, np.arange(3))
    checks["Morse n<=2"] = (np.all(rel < 1e-3), f"max rel {rel.max():.1e}")
    harm = solve_vibrational(harmonic_model(RE_GROUND_BOHR, OMEGA_E_GROUND_CM, mu), 6)
    hrel = np.abs(harm.energies - OMEGA_E_GROUND_CM * (np.arange(6) + 0.5)) / (OMEGA_E_GROUND_CM * (np.arange(6) + 0.5))
    checks["harmonic"] = (np.all(hrel < 5e-4), f"max rel {hrel.max():.1e}")
    for name, res in (("Morse", morse), ("harmonic", harm)):
        nodes = [res.nodes(n) for n in range(6)]
        gram = res.psi @ res.psi.T * res.problem.step
        ortho = np.max(np.abs(gram - np.eye(6)))
        checks[f"{name} nodes"] = (nodes == list(range(6)), str(nodes))
        checks[f"{name} orthonormal"] = (ortho < 1e-8, f"{ortho:.1e}")
    verdict("C7", checks)


def test_c8_saturation_ceiling():
    rows = generate_table2(ISOTOPES, TABLE1, 1.0, np.pi / 4, 0.5)
    top = {}
    for r in rows:
        top[r.isotope] = max(top.get(r.isotope, 0.0), abs(r.rabi_khz))
    verdict(
        "C8",
        {
            "Li max Rabi kHz": within(top["Li-7"], 10.1, 0.05),
            "Na max Rabi kHz": within(top["Na-23"], 123.8, 0.05),
        },
    )
