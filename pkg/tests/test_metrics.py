import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symptorus.errors import BaseNormContract, NotHamiltonian, ResolutionMismatch
from symptorus.fixtures import smooth_hamiltonian, smooth_mixed, translation
from symptorus.grid_calculus import grid
from symptorus.isotopy import (
    Isotopy,
    concatenate,
    flow,
    hamiltonian_isotopy,
    harmonic_isotopy,
    inverse,
    isotopy_from_split,
    pointwise_quotient,
    translation_map,
)
from symptorus.metrics import (
    c0_distance,
    d_symp,
    distance_d,
    energy_e0,
    extended_distance,
    han_norm,
    hofer_length,
    iso_distance_D,
    length,
    norm_e,
)


def constant_potential(u, m=17):
    return hamiltonian_isotopy(np.broadcast_to(u, (m,) + u.shape).copy())


def test_hofer_length_examples():
    n = 64
    x, _ = grid(n)
    assert hofer_length(Isotopy.zero(n, 17)) == 0.0
    assert hofer_length(constant_potential(np.sin(2 * np.pi * x))) == pytest.approx(2.0, abs=1e-9)
    t = np.linspace(0.0, 1.0, 17)[:, None, None]
    assert hofer_length(hamiltonian_isotopy(t * np.sin(2 * np.pi * x))) == pytest.approx(1.0, abs=1e-9)


def test_hofer_length_rejects_harmonic_frames():
    with pytest.raises(NotHamiltonian):
        hofer_length(translation((0.1, 0.0), 8, 17))


def test_length_examples():
    lb = length(harmonic_isotopy(np.tile([0.7, -0.4], (17, 1)), 8))
    assert lb.total == pytest.approx(1.1, abs=1e-14) and lb.hofer_part == 0.0
    n = 64
    _, y = grid(n)
    iso = isotopy_from_split(np.tile([1.0, 0.0], (17, 1)), np.broadcast_to(np.sin(2 * np.pi * y), (17, n, n)))
    lb = length(iso)
    assert lb.harmonic_part == pytest.approx(1.0, abs=1e-12)
    assert lb.hofer_part == pytest.approx(2.0, abs=1e-9)
    assert lb.total == pytest.approx(3.0, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_length_reduces_to_hofer_length(seed):
    iso = smooth_hamiltonian(16, 17, np.random.default_rng(seed), modes=1)
    lb = length(iso)
    assert lb.total == hofer_length(iso) and lb.harmonic_part == 0.0


def test_length_additive_under_concatenation():
    a = smooth_mixed(32, 33, np.random.default_rng(3))
    b = smooth_mixed(32, 33, np.random.default_rng(4))
    la, lb = length(a).total, length(b).total
    assert abs(length(concatenate(a, b)).total - la - lb) < 1e-6 * (la + lb)


def test_length_vanishes_only_on_zero():
    assert length(Isotopy.zero(8, 17)).total == 0.0
    assert length(translation((1e-3, 0.0), 8, 17)).total > 0.0


@given(st.integers(0, 2**32 - 1))
def test_distance_D_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (smooth_mixed(16, 17, rng, modes=1) for _ in range(3))
    assert iso_distance_D(a, a) == 0.0
    assert iso_distance_D(a, b) == iso_distance_D(b, a)
    assert iso_distance_D(a, c) <= iso_distance_D(a, b) + iso_distance_D(b, c) + 1e-9


def test_distance_D_to_zero_is_length(rng):
    a = smooth_mixed(16, 17, rng)
    assert iso_distance_D(a, Isotopy.zero(16, 17)) == pytest.approx(length(a).total, abs=1e-15)
    with pytest.raises(ResolutionMismatch):
        iso_distance_D(a, Isotopy.zero(16, 33))


def test_distance_D_matches_hofer_length_of_quotient():
    p = smooth_hamiltonian(64, 65, np.random.default_rng(5))
    q = smooth_hamiltonian(64, 65, np.random.default_rng(6))
    assert abs(iso_distance_D(p, q) - hofer_length(pointwise_quotient(p, q))) < 1e-4


def test_energy_of_identity():
    est = energy_e0(Isotopy.zero(16, 17), budget=20)
    assert est.lower == 0.0 and est.upper == 0.0


@pytest.mark.parametrize("vector, lower, upper", [((0.3, 0.2), 0.5, 0.51), ((0.9, 0.0), 0.1, 0.12)])
def test_energy_of_translations(vector, lower, upper):
    est = energy_e0(translation(vector, 16, 17), budget=200)
    assert est.lower == pytest.approx(lower, abs=1e-12)
    assert est.lower <= est.upper <= upper
    assert est.budget_used <= 200


def test_energy_finds_class_shift():
    est = energy_e0(translation((0.9, 0.0), 16, 17), budget=200)
    assert est.class_shift != (0, 0)
    # the candidate reaches the same endpoint
    assert np.abs(flow(est.candidate, 1.0).wrapped - translation_map(16, (0.9, 0.0)).wrapped).max() < 1e-6


def test_energy_is_deterministic(rng):
    iso = smooth_mixed(16, 17, rng)
    a, b = energy_e0(iso, budget=30), energy_e0(iso, budget=30)
    assert a.upper == b.upper and np.array_equal(a.parameters, b.parameters)


def test_energy_rejects_bad_arguments():
    with pytest.raises(ValueError):
        energy_e0(Isotopy.zero(8, 17), budget=0)
    with pytest.raises(ValueError):
        energy_e0(Isotopy.zero(8, 17), mode="fast")


def test_norm_e_symmetric_and_below_hofer_length():
    iso = translation((0.2, -0.1), 16, 17)
    assert norm_e(iso, budget=20) == norm_e(inverse(iso), budget=20)
    ham = smooth_hamiltonian(32, 17, np.random.default_rng(7))
    assert norm_e(ham, budget=20) <= 1.02 * hofer_length(ham)


def test_norm_e_of_identity():
    assert norm_e(Isotopy.zero(8, 17), budget=10) == 0.0


def test_distance_d_examples():
    phi = smooth_mixed(16, 17, np.random.default_rng(8))
    assert distance_d(phi, phi, budget=40) <= 1e-3
    assert distance_d(phi, Isotopy.zero(16, 17), budget=40) == pytest.approx(norm_e(phi, budget=40), abs=1e-9)


def test_distance_d_right_invariant():
    rng = np.random.default_rng(9)
    phi, psi, sigma = (smooth_mixed(16, 17, rng) for _ in range(3))
    base = distance_d(phi, psi, budget=40)
    moved = distance_d(concatenate(phi, sigma), concatenate(psi, sigma), budget=40)
    assert moved == pytest.approx(base, rel=0.02)


def test_han_norm_examples():
    assert han_norm(Isotopy.zero(16, 17), K=1.0, budget=10) == 0.0
    half = harmonic_isotopy(np.tile([0.5, 0.0], (17, 1)), 16)
    assert han_norm(half, K=1.0, budget=10) == 1.0
    x, _ = grid(32)
    shear = constant_potential(0.2 * np.sin(2 * np.pi * x))
    assert hofer_length(shear) == pytest.approx(0.4, abs=1e-12)
    assert han_norm(shear, K=1.0, budget=40) <= 0.41
    with pytest.raises(ValueError):
        han_norm(shear, K=0.0)


@pytest.mark.parametrize("a, b, expected", [(0.1, 0.3, 0.2), (0.0, 0.7, 0.3)])
def test_c0_distance_of_translations(a, b, expected):
    pa, pb = translation_map(8, (a, 0.0)), translation_map(8, (b, 0.0))
    qa, qb = translation_map(8, (-a, 0.0)), translation_map(8, (-b, 0.0))
    assert c0_distance(pa, pb, qa, qb) == pytest.approx(expected, abs=1e-14)
    assert c0_distance(pa, pa, qa, qa) == 0.0


def test_d_symp_of_translations():
    a, b = translation((0.2, 0.0), 16, 17), translation((0.4, 0.0), 16, 17)
    assert iso_distance_D(a, b) == pytest.approx(0.2, abs=1e-14)
    assert d_symp(a, b) == pytest.approx(0.4, abs=1e-12)
    assert d_symp(a, a) == 0.0


def test_d_symp_dominates_D(rng):
    a, b = smooth_mixed(16, 17, rng), smooth_mixed(16, 17, rng)
    assert d_symp(a, b) >= iso_distance_D(a, b)


def zero_on_identity(iso):
    return float(np.abs(iso.potentials).max())


def test_extended_distance_examples():
    a = translation((0.3, 0.1), 16, 17)
    b = translation((0.1, 0.2), 16, 17)
    assert extended_distance(a, a, zero_on_identity) == 0.0
    expected = np.abs(a.harmonic_coeffs[0] - b.harmonic_coeffs[0]).sum()
    assert extended_distance(a, b, zero_on_identity) == pytest.approx(expected, abs=1e-12)


def test_extended_distance_across_classes_is_rejected():
    # same endpoint, reached through different lattice classes
    a = translation((0.3, 0.0), 16, 17)
    b = translation((1.3, 0.0), 16, 17)
    with pytest.raises(NotHamiltonian):
        extended_distance(a, b, zero_on_identity)


def test_extended_distance_checks_base_norm():
    a = translation((0.3, 0.1), 8, 17)
    with pytest.raises(BaseNormContract):
        extended_distance(a, a, lambda iso: 1.0)
