"""Flux of an isotopy, the flux lattice of the torus, and Hamiltonian membership."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson

from .grid_calculus import OneForm
from .hodge import HarmonicForm, harmonic_norm
from .isotopy import Isotopy, flat_covectors, harmonic_isotopy

__all__ = [
    "FluxLattice",
    "HamiltonianReport",
    "time_integral",
    "flux_harmonic",
    "translation_loop",
    "lattice",
    "distance_to_lattice",
    "is_hamiltonian",
]

HAMILTONIAN_TOL = 1e-6


def time_integral(values: np.ndarray) -> np.ndarray:
    """Composite Simpson rule over the uniform grid ``t_k = k/(m-1)`` along axis 0."""
    values = np.asarray(values, dtype=float)
    return simpson(values, dx=1.0 / (values.shape[0] - 1), axis=0)


def flux_harmonic(iso: Isotopy) -> tuple[OneForm, HarmonicForm]:
    """The flux form ``int_0^1 i_{X_t} omega dt`` and its harmonic representative."""
    form = OneForm(time_integral(iso.frames))
    return form, HarmonicForm(time_integral(iso.harmonic_coeffs))


def translation_loop(vector, n: int = 8, m: int = 17, omega_scale: float = 1.0) -> Isotopy:
    """The path of translations ``t -> x + t v``; a loop when ``v`` is an integer vector."""
    coeffs = omega_scale * flat_covectors(np.asarray(vector, dtype=float))
    return harmonic_isotopy(np.tile(coeffs, (m, 1)), n)


@dataclass(frozen=True, eq=False)
class FluxLattice:
    """Rows of ``generators`` are harmonic coefficient vectors spanning the lattice."""

    generators: np.ndarray

    def __post_init__(self):
        gens = np.asarray(self.generators, dtype=float)
        if gens.shape != (2, 2):
            raise ValueError(f"a rank-2 lattice needs a (2, 2) generator matrix, got {gens.shape}")
        if abs(np.linalg.det(gens)) < 1e-12:
            raise ValueError("lattice generators are linearly dependent")
        object.__setattr__(self, "generators", gens)

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.generators))

    def element(self, integers) -> np.ndarray:
        return np.asarray(integers, dtype=float) @ self.generators

    def coordinates(self, h) -> np.ndarray:
        """Real coordinates of ``h`` against the generators."""
        return np.linalg.solve(self.generators.T, np.asarray(h, dtype=float))


@lru_cache(maxsize=8)
def _measured_generators(omega_scale: float) -> tuple:
    rows = []
    # unit translations along x and y; their fluxes are the classes of dy and -dx
    for vector in ((1.0, 0.0), (0.0, 1.0)):
        _, h = flux_harmonic(translation_loop(vector, omega_scale=omega_scale))
        rows.append(tuple(h.coeffs))
    return tuple(rows)


def lattice(omega_scale: float = 1.0) -> FluxLattice:
    """Flux group of ``(T^2, omega_scale * dx^dy)``, measured from unit translation loops."""
    return FluxLattice(np.array(_measured_generators(float(omega_scale))))


def distance_to_lattice(h: HarmonicForm, lat: FluxLattice | None = None) -> tuple[float, np.ndarray]:
    """l1 distance from ``h`` to the lattice and the nearest element (first found on ties).

    Integer coordinates are enumerated over the box ``|z_i| <= ceil(|c_i|) + 1``
    where ``c`` are the real coordinates of ``h``.
    """
    lat = lat or lattice()
    coeffs = h.coeffs if isinstance(h, HarmonicForm) else np.asarray(h, dtype=float)
    c = lat.coordinates(coeffs)
    bounds = [int(np.ceil(abs(ci))) + 1 for ci in c]
    best, nearest = np.inf, None
    for z in itertools.product(*(range(-b, b + 1) for b in bounds)):
        element = lat.element(z)
        d = harmonic_norm(HarmonicForm(coeffs - element))
        if d < best:
            best, nearest = d, element
    return float(best), nearest


@dataclass(frozen=True)
class HamiltonianReport:
    hamiltonian: bool
    flux: np.ndarray
    distance: float
    nearest: np.ndarray

    def __bool__(self) -> bool:
        return self.hamiltonian

    def to_dict(self) -> dict:
        return {
            "flux": [float(v) for v in self.flux],
            "lattice_distance": self.distance,
            "nearest": [float(v) for v in self.nearest],
            "hamiltonian": self.hamiltonian,
        }


def is_hamiltonian(iso: Isotopy, tol: float = HAMILTONIAN_TOL) -> HamiltonianReport:
    """Whether the endpoint is Hamiltonian, i.e. the flux lies on the lattice within ``tol``.

    A nonzero nearest element means the endpoint is reached through a
    nontrivial class of paths.
    """
    _, h = flux_harmonic(iso)
    dist, nearest = distance_to_lattice(h)
    return HamiltonianReport(bool(dist <= tol), h.coeffs, dist, nearest)
