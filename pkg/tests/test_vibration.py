import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oner.constants import MU_LINA_U, OMEGA_E_GROUND_CM, RE_GROUND_BOHR
from oner.errors import InvalidArgumentError
from oner.vibration import (
    VibrationalProblem,
    harmonic_model,
    load_pes,
    morse_levels,
    morse_model,
    morse_parameters,
    solve_vibrational,
    vibrational_average,
)

DE = 7100.0


@pytest.fixture(scope="module")
def morse_ground():
    return solve_vibrational(morse_model(RE_GROUND_BOHR, OMEGA_E_GROUND_CM, DE, MU_LINA_U), 6)


@pytest.fixture(scope="module")
def harmonic_ground():
    return solve_vibrational(harmonic_model(RE_GROUND_BOHR, OMEGA_E_GROUND_CM, MU_LINA_U), 6)


def test_reduced_mass_from_isotope_masses():
    assert MU_LINA_U == pytest.approx(7.0160034366 * 22.9897692820 / (7.0160034366 + 22.9897692820), rel=1e-15)
    assert MU_LINA_U == pytest.approx(5.3755, abs=1e-4)


def test_morse_levels_match_analytic(morse_ground):
    exact = morse_levels(OMEGA_E_GROUND_CM, DE, np.arange(6))
    rel = np.abs(morse_ground.energies - exact) / exact
    assert np.all(rel[:3] < 1e-3)
    assert np.all(rel < 1e-3)


def test_morse_fundamental(morse_ground):
    _, xe = morse_parameters(OMEGA_E_GROUND_CM, DE, MU_LINA_U)
    assert morse_ground.fundamental == pytest.approx(OMEGA_E_GROUND_CM * (1 - 2 * xe), rel=1e-3)


def test_harmonic_levels(harmonic_ground):
    exact = OMEGA_E_GROUND_CM * (np.arange(6) + 0.5)
    assert np.all(np.abs(harmonic_ground.energies - exact) / exact < 5e-4)


def test_morse_harmonic_limit():
    res = solve_vibrational(morse_model(5.0, 212.0, 1e8, MU_LINA_U, n_states=3), 3)
    exact = 212.0 * (np.arange(3) + 0.5)
    assert np.all(np.abs(res.energies - exact) / exact < 1e-3)


def test_richardson_second_order():
    # wide walls so the Dirichlet truncation does not mask the stencil error
    errs = []
    for n in (501, 1001, 2001):
        res = solve_vibrational(harmonic_model(5.0, 249.0, MU_LINA_U, n_points=n, n_states=3, margin=1.0), 3)
        errs.append(res.energies[2] - 249.0 * 2.5)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)


def test_harmonic_error_shrinks_monotonically_with_refinement():
    # the three-point stencil approaches the oracle from below; |error| decreases on refinement
    prev = np.inf
    for n in (201, 401, 801, 1601, 3201):
        res = solve_vibrational(harmonic_model(5.0, 249.0, MU_LINA_U, n_points=n, n_states=4, margin=1.0), 4)
        err = np.abs(res.energies - 249.0 * (np.arange(4) + 0.5))
        assert np.all(res.energies < 249.0 * (np.arange(4) + 0.5))
        assert np.max(err) < prev
        prev = np.max(err)


def test_node_counts(morse_ground, harmonic_ground):
    for res in (morse_ground, harmonic_ground):
        assert [res.nodes(n) for n in range(6)] == list(range(6))


def test_orthonormality(morse_ground):
    h = morse_ground.problem.step
    gram = morse_ground.psi @ morse_ground.psi.T * h
    assert np.max(np.abs(gram - np.eye(6))) < 1e-8
    assert np.all(np.abs(np.sum(morse_ground.psi**2, axis=1) * h - 1) < 1e-10)


def test_energies_ascending(morse_ground):
    assert np.all(np.diff(morse_ground.energies) > 0)


def test_average_constant_curve(morse_ground):
    assert vibrational_average(morse_ground, 3.7, 2) == pytest.approx(3.7, abs=1e-10)
    curve = np.full(morse_ground.problem.grid.shape, -27.9)
    assert vibrational_average(morse_ground, curve) == pytest.approx(-27.9, abs=1e-10)


def test_average_r_harmonic_is_re(harmonic_ground):
    R = harmonic_ground.problem.grid
    assert vibrational_average(harmonic_ground, R) == pytest.approx(RE_GROUND_BOHR, abs=1e-9)


def test_average_r_morse_shifted_outward(morse_ground):
    R = morse_ground.problem.grid
    avg = vibrational_average(morse_ground, R)
    assert avg > RE_GROUND_BOHR
    ref = solve_vibrational(morse_model(RE_GROUND_BOHR, OMEGA_E_GROUND_CM, DE, MU_LINA_U, n_points=8001), 1)
    assert avg == pytest.approx(vibrational_average(ref, ref.problem.grid), abs=1e-5)


def test_property_curves_averaged():
    prob = morse_model(RE_GROUND_BOHR, OMEGA_E_GROUND_CM, DE, MU_LINA_U)
    prob.properties["qzz"] = np.full(prob.grid.shape, 133.2)
    res = solve_vibrational(prob, 3)
    assert res.averages(0)["qzz"] == pytest.approx(133.2, abs=1e-9)


def test_misaligned_curve_rejected(morse_ground):
    with pytest.raises(InvalidArgumentError):
        vibrational_average(morse_ground, np.ones(10))


def test_problem_validation():
    g = np.linspace(3, 9, 100)
    with pytest.raises(InvalidArgumentError):
        VibrationalProblem(g[:40], g[:40] ** 2, 5.0)
    with pytest.raises(InvalidArgumentError):
        VibrationalProblem(np.concatenate([g[:50], g[51:]]), np.ones(99), 5.0)
    with pytest.raises(InvalidArgumentError):
        VibrationalProblem(g, np.where(g > 5, np.inf, 0.0), 5.0)
    with pytest.raises(InvalidArgumentError):
        VibrationalProblem(g, g**2, 5.0, V_unit="eV")
    with pytest.raises(InvalidArgumentError):
        solve_vibrational(VibrationalProblem(g, (g - 6) ** 2, 5.0), 30)


def test_turning_points_must_be_inside_grid():
    with pytest.raises(InvalidArgumentError):
        morse_model(RE_GROUND_BOHR, OMEGA_E_GROUND_CM, DE, MU_LINA_U, r_min=5.3, r_max=9.0)
    with pytest.raises(InvalidArgumentError):
        morse_model(RE_GROUND_BOHR, OMEGA_E_GROUND_CM, -1.0, MU_LINA_U)


def test_unbound_states_flagged():
    # shallow well with only a few bound levels on a wide grid
    prob = morse_model(5.0, 249.0, 600.0, MU_LINA_U, n_states=2, r_max=40.0, n_points=3001)
    with pytest.warns(RuntimeWarning, match="plateau"):
        res = solve_vibrational(prob, 10)
    assert res.bound[0] and not res.bound[-1]


def test_pes_file_roundtrip(tmp_path):
    R = np.linspace(3.0, 10.0, 400)
    V = 0.5 * 0.02 * (R - 5.5) ** 2
    path = tmp_path / "pes.txt"
    np.savetxt(path, np.column_stack([R, V, 0.1 * R]), header="R_bohr V_hartree dipole")
    prob = load_pes(path, MU_LINA_U)
    assert prob.V_unit == "hartree"
    res = solve_vibrational(prob, 2)
    assert res.averages(0)["dipole"] == pytest.approx(0.55, abs=1e-6)


def test_pes_file_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# x y\n1 2\n")
    with pytest.raises(InvalidArgumentError):
        load_pes(path, 5.0)


@settings(max_examples=15, deadline=None)
@given(we=st.floats(150, 400), De=st.floats(4000, 12000), Re=st.floats(4.0, 7.0))
def test_morse_oracle_property(we, De, Re):
    res = solve_vibrational(morse_model(Re, we, De, MU_LINA_U, n_states=3), 3)
    exact = morse_levels(we, De, np.arange(3))
    assert np.all(np.abs(res.energies - exact) / exact < 1e-3)
    assert [res.nodes(n) for n in range(3)] == [0, 1, 2]
