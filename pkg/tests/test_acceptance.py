"""Acceptance criteria at desk scale (n = 64, m = 65); one summary line per criterion."""

import itertools

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from symptorus import fixtures
from symptorus.cli import run
from symptorus.deformation import integrate_G, proposition_residual, verify_estimate, verify_proposition, zero_average
from symptorus.flux import flux_harmonic, lattice
from symptorus.grid_calculus import OneForm, gradient
from symptorus.hodge import hodge_decompose
from symptorus.isotopy import concatenate, factorize, harmonic_isotopy, inverse, pointwise_quotient
from symptorus.metrics import energy_e0, hofer_length, iso_distance_D, length, norm_e
from symptorus.suite import factorization_error

N, M = 64, 65


def record(number: int, name: str, measured: float, bound: float, passed: bool, note: str = "") -> None:
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: measured {measured:.3e}, bound {bound:.3e}"
    if note:
        line += f"  ({note})"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert passed, line


def seeded(*key):
    return np.random.default_rng([2024, *key])


def lattice_oracle(vector) -> float:
    a, b = vector
    return min(abs(a - i) + abs(b - j) for i, j in itertools.product(range(-4, 5), repeat=2))


def test_criterion_01_hodge_round_trip():
    rng = seeded(1)
    worst_rec, worst_exact = 0.0, 0.0
    for _ in range(50):
        H, u = fixtures.random_closed_form(N, rng, modes=int(rng.integers(1, 8)))
        alpha = OneForm(H[:, None, None] + gradient(u))
        worst_rec = max(worst_rec, np.abs(hodge_decompose(alpha).reconstruct().data - alpha.data).max())
        worst_exact = max(worst_exact, np.abs(hodge_decompose(OneForm(gradient(u))).harmonic.coeffs).max())
    record(1, "Hodge reconstruction residual", worst_rec, 1e-9, worst_rec < 1e-9)
    record(1, "harmonic part of exact forms", worst_exact, 1e-12, worst_exact < 1e-12)


def test_criterion_02_reduction_identity():
    rng = seeded(2)
    worst = 0.0
    for _ in range(20):
        iso = fixtures.smooth_hamiltonian(N, M, rng)
        lb = length(iso)
        worst = max(worst, abs(lb.total - hofer_length(iso)) + abs(lb.harmonic_part))
    record(2, "length minus Hofer length on exact paths", worst, 0.0, worst == 0.0)


def test_criterion_03_concatenation_additivity():
    rng = seeded(3)
    worst = 0.0
    for _ in range(20):
        a, b = fixtures.smooth_mixed(N, M, rng), fixtures.smooth_mixed(N, M, rng)
        la, lb = length(a).total, length(b).total
        worst = max(worst, abs(length(concatenate(a, b)).total - la - lb) / (la + lb))
    record(3, "relative length additivity error", worst, 1e-6, worst < 1e-6)


def test_criterion_04_factorization():
    rng = seeded(4)
    worst_flow, worst_psi = 0.0, 0.0
    for _ in range(3):
        iso = fixtures.smooth_mixed(N, M, rng)
        rho, psi = factorize(iso)
        worst_flow = max(worst_flow, factorization_error(iso, rho, psi, samples=9))
        worst_psi = max(worst_psi, np.abs(psi.harmonic_coeffs).max())
    record(4, "rho o psi against phi at 9 times", worst_flow, 1e-5, worst_flow < 1e-5)
    record(4, "harmonic part of psi", worst_psi, 1e-10, worst_psi < 1e-10)


def test_criterion_05_flux():
    rng = seeded(5)
    worst_ham = max(np.abs(flux_harmonic(fixtures.smooth_hamiltonian(N, M, rng))[1].coeffs).max() for _ in range(10))
    record(5, "flux of Hamiltonian paths", worst_ham, 1e-10, worst_ham < 1e-10)

    gens = lattice().generators
    worst_loop = 0.0
    for vector in ((1.0, 0.0), (0.0, 1.0)):
        _, h = flux_harmonic(fixtures.translation(vector, N, M))
        worst_loop = max(worst_loop, min(np.abs(h.coeffs - s * g).max() for g in gens for s in (1, -1)))
    record(5, "unit loops on lattice generators", worst_loop, 1e-9, worst_loop < 1e-9)

    worst_add = 0.0
    for _ in range(5):
        a, b = fixtures.smooth_mixed(N, M, rng), fixtures.smooth_mixed(N, M, rng)
        ha, hb = flux_harmonic(a)[1].coeffs, flux_harmonic(b)[1].coeffs
        hc = flux_harmonic(concatenate(a, b))[1].coeffs
        worst_add = max(worst_add, np.abs(hc - ha - hb).max())
    record(5, "flux additivity under concatenation", worst_add, 1e-8, worst_add < 1e-8)


def test_criterion_06_energy_sandwich():
    worst_lower, worst_gap = 0.0, 0.0
    shift_found = False
    for vector in ((0.3, 0.2), (0.9, 0.0), (0.5, 0.5)):
        est = energy_e0(fixtures.translation(vector, N, M), budget=200)
        oracle = lattice_oracle(vector)
        worst_lower = max(worst_lower, abs(est.lower - oracle))
        worst_gap = max(worst_gap, est.upper / oracle - 1.0)
        assert est.lower <= est.upper
        if vector == (0.9, 0.0):
            shift_found = est.class_shift != (0, 0) and est.upper <= 0.12
    record(6, "lower bound minus lattice-distance oracle", worst_lower, 1e-12, worst_lower <= 1e-12)
    record(6, "relative gap of upper bound", worst_gap, 0.02, worst_gap <= 0.02 and shift_found,
           "class shift found for (0.9, 0)" if shift_found else "class shift missed for (0.9, 0)")


def test_criterion_07_hofer_upper_bound():
    rng = seeded(7)
    worst = -np.inf
    for _ in range(10):
        iso = fixtures.smooth_hamiltonian(N, M, rng)
        worst = max(worst, norm_e(iso, budget=40) / hofer_length(iso) - 1.0)
    record(7, "norm_e / hofer_length - 1", worst, 0.02, worst <= 0.02)


def test_criterion_08_distance_D():
    rng = seeded(8)
    worst_sym, worst_tri = 0.0, -np.inf
    for _ in range(10):
        a, b, c = (fixtures.smooth_mixed(N, M, rng) for _ in range(3))
        worst_sym = max(worst_sym, abs(iso_distance_D(a, b) - iso_distance_D(b, a)))
        worst_tri = max(worst_tri, iso_distance_D(a, c) - iso_distance_D(a, b) - iso_distance_D(b, c))
    record(8, "D symmetry defect", worst_sym, 1e-9, worst_sym <= 1e-9)
    record(8, "D triangle slack (max of d_ac - d_ab - d_bc)", worst_tri, 1e-9, worst_tri <= 1e-9)

    worst = 0.0
    for _ in range(3):
        p, q = fixtures.smooth_hamiltonian(N, M, rng), fixtures.smooth_hamiltonian(N, M, rng)
        worst = max(worst, abs(iso_distance_D(p, q) - hofer_length(pointwise_quotient(p, q))))
    record(8, "|D - Hofer length of quotient|", worst, 1e-4, worst < 1e-4)


def _sine_loop():
    t = np.linspace(0.0, 1.0, M)
    return harmonic_isotopy(np.outer(2 * np.sin(np.pi * t) ** 2, [1.0, 0.0]), N)


@pytest.mark.parametrize("name", ["sine", "polynomial"])
def test_criterion_09_deformation(name):
    rho = _sine_loop() if name == "sine" else fixtures.polynomial_loop(N, M)
    report = verify_proposition(rho)
    record(9, f"{name} loop: s-average of Z", report.zero_average, 1e-10, report.zero_average < 1e-10)
    record(9, f"{name} loop: G(1,1) against rho_1", report.endpoint_displacement, 1e-5,
           report.is_loop and report.endpoint_displacement < 1e-5)
    record(9, f"{name} loop: residual of i(V_(1,t)) omega - dw_t", report.residual, 1e-3, report.residual < 1e-3)
    fine = proposition_residual(integrate_G(rho, 65, 65))
    record(9, f"{name} loop: residual after grid doubling", fine, report.residual / 4.0, fine <= report.residual / 4.0,
           "residual vanishes identically at both grids" if report.residual == 0.0 else "")
    worst = -np.inf
    for scale in (1.0, 0.5, 0.25):
        est = verify_estimate(rho.scaled(scale))
        worst = max(worst, est.osc_w_max - 4.0 * est.A * est.E * est.eta * 1.01)
    record(9, f"{name} loop: osc(w) - 1.01 * 4 A E eta over scales", worst, 0.0, worst <= 0.0)


def test_criterion_10_asymmetry_witness():
    iso = fixtures.turning_shear(N, M)
    gap = abs(length(iso).total - length(inverse(iso)).total)
    record(10, "|l(Phi) - l(Phi^-1)|", gap, 0.01, gap > 0.01)


def test_criterion_11_determinism(tmp_path):
    outputs = []
    for k in range(2):
        path = tmp_path / f"report{k}.json"
        status, _ = run(["verify", "--seed", "0", "--out", str(path)])
        outputs.append((status, path.read_bytes()))
    same = outputs[0][1] == outputs[1][1]
    record(11, "verify reports differ (bytes)", 0.0 if same else 1.0, 0.0, same and outputs[0][0] == 0,
           f"exit status {outputs[0][0]}")
