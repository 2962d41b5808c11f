"""Seeded test isotopies shared by the verification suite and the tests."""

from __future__ import annotations

import numpy as np

from .grid_calculus import grid
from .isotopy import Isotopy, flat_covectors, harmonic_isotopy, hamiltonian_isotopy, isotopy_from_split

__all__ = [
    "band_limited",
    "random_closed_form",
    "smooth_mixed",
    "smooth_hamiltonian",
    "translation",
    "polynomial_loop",
    "turning_shear",
]


def band_limited(n: int, rng: np.random.Generator, modes: int = 2, amplitude: float = 1.0) -> np.ndarray:
    """Mean-zero real field with Fourier modes ``|k_x|, |k_y| <= modes``, scaled to ``max |u| = amplitude``."""
    if modes >= n // 4:
        raise ValueError(f"band limit {modes} must stay below n/4 = {n // 4}")
    hat = np.zeros((n, n), dtype=complex)
    ks = range(-modes, modes + 1)
    for i in ks:
        for j in ks:
            if (i, j) != (0, 0):
                hat[i, j] = rng.normal() + 1j * rng.normal()
    u = np.fft.ifft2(hat).real
    u -= u.mean()
    return amplitude * u / np.abs(u).max()


def random_closed_form(n: int, rng: np.random.Generator, modes: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """A closed form ``H + du`` as ``(coeffs, u)``."""
    return rng.uniform(-1.0, 1.0, 2), band_limited(n, rng, modes)


def smooth_mixed(
    n: int, m: int, rng: np.random.Generator, amplitude: float = 0.01, harmonic: float = 0.3, modes: int = 2
) -> Isotopy:
    """Frames ``H0 + t H1 + c(t) du0`` with sign-stable ``H`` and ``c > 0``.

    The length integrand is then smooth in ``t``, which the quadrature
    identities rely on.
    """
    t = np.linspace(0.0, 1.0, m)
    signs = rng.choice([-1.0, 1.0], 2)
    H0 = signs * rng.uniform(0.3 * harmonic, harmonic, 2)
    H1 = signs * rng.uniform(0.0, 0.2 * harmonic, 2)
    c = rng.uniform(0.6, 1.2) + rng.uniform(-0.3, 0.3) * np.sin(np.pi * t)
    u0 = band_limited(n, rng, modes, amplitude)
    return isotopy_from_split(H0 + t[:, None] * H1, c[:, None, None] * u0)


def smooth_hamiltonian(n: int, m: int, rng: np.random.Generator, amplitude: float = 0.01, modes: int = 2) -> Isotopy:
    """Exact frames ``d(c(t) u0 + t^2 u1)``."""
    t = np.linspace(0.0, 1.0, m)
    c = rng.uniform(0.6, 1.2) + rng.uniform(-0.3, 0.3) * np.sin(np.pi * t)
    u0 = band_limited(n, rng, modes, amplitude)
    u1 = band_limited(n, rng, modes, 0.5 * amplitude)
    return hamiltonian_isotopy(c[:, None, None] * u0 + (t**2)[:, None, None] * u1)


def translation(vector, n: int, m: int) -> Isotopy:
    """Constant-speed path whose time-1 map is the translation by ``vector``."""
    coeffs = flat_covectors(np.asarray(vector, dtype=float))
    return harmonic_isotopy(np.tile(coeffs, (m, 1)), n)


def polynomial_loop(n: int, m: int, scale: float = 1.0) -> Isotopy:
    """Harmonic path ``6 t (1 - t) scale dx``; a loop when ``scale`` is an integer."""
    t = np.linspace(0.0, 1.0, m)
    return harmonic_isotopy(np.outer(6.0 * t * (1.0 - t) * scale, [1.0, 0.0]), n)


def turning_shear(n: int, m: int, drift=(0.5, 0.5), amplitude: float = 0.05) -> Isotopy:
    """Frames ``drift + d(amplitude ((1 - t) sin 2 pi x + t sin 2 pi y))``.

    The shear turns from vertical to horizontal while the drift translates
    across it, so the generators at different times do not commute and the
    path is longer or shorter than its inverse.
    """
    X, Y = grid(n)
    t = np.linspace(0.0, 1.0, m)[:, None, None]
    u = amplitude * ((1.0 - t) * np.sin(2.0 * np.pi * X) + t * np.sin(2.0 * np.pi * Y))
    return isotopy_from_split(np.tile(np.asarray(drift, dtype=float), (m, 1)), u)
