"""Lengths, energies, norms and distances of symplectic isotopies of the torus."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .errors import BaseNormContract, NotHamiltonian, ResolutionMismatch
from .flux import distance_to_lattice, flux_harmonic, is_hamiltonian, time_integral
from .grid_calculus import shear_compose, toroidal_distance, translate
from .hodge import split_arrays
from .isotopy import (
    FlowMap,
    Isotopy,
    concatenate,
    factorize,
    flat_covectors,
    flow_path,
    harmonic_isotopy,
    inverse,
    isotopy_from_split,
    pointwise_quotient,
    resample,
    time_splines,
)

__all__ = [
    "LengthBreakdown",
    "EnergyEstimate",
    "EnergyConfig",
    "hofer_length",
    "length",
    "iso_distance_D",
    "energy_e0",
    "norm_e",
    "distance_d",
    "han_norm",
    "c0_distance",
    "d_symp",
    "extended_distance",
]

EXACT_TOL = 1e-8


def _osc(potentials: np.ndarray) -> np.ndarray:
    return potentials.max(axis=(-2, -1)) - potentials.min(axis=(-2, -1))


def _length_terms(coeffs: np.ndarray, potentials: np.ndarray) -> tuple[float, float]:
    harmonic_part = float(time_integral(np.abs(coeffs).sum(axis=-1)))
    hofer_part = float(time_integral(_osc(potentials)))
    return harmonic_part, hofer_part


@dataclass(frozen=True)
class LengthBreakdown:
    harmonic_part: float
    hofer_part: float
    total: float

    def to_dict(self) -> dict:
        return {"harmonic_part": self.harmonic_part, "hofer_part": self.hofer_part, "total": self.total}


def hofer_length(iso: Isotopy, tol: float = EXACT_TOL) -> float:
    """Time integral of ``osc(u_t)`` for an isotopy with exact frames."""
    coeffs, potentials = iso.split
    worst = float(np.abs(coeffs).max())
    if worst > tol:
        raise NotHamiltonian(f"frame has harmonic part {worst:.3e} > {tol:.1e}")
    return float(time_integral(_osc(potentials)))


def length(iso: Isotopy) -> LengthBreakdown:
    """``int (|H_t| + osc(u_t)) dt`` split into its harmonic and Hofer parts."""
    harmonic_part, hofer_part = _length_terms(*iso.split)
    return LengthBreakdown(harmonic_part, hofer_part, harmonic_part + hofer_part)


def iso_distance_D(phi: Isotopy, psi: Isotopy) -> float:
    """Length of the frame-by-frame difference of two generator paths."""
    if phi.n != psi.n or phi.m != psi.m:
        raise ResolutionMismatch(f"D needs matching grids, got (n, m) = {(phi.n, phi.m)} and {(psi.n, psi.m)}")
    return sum(_length_terms(*split_arrays(phi.frames - psi.frames)))


# --- energy ------------------------------------------------------------------


def _loop_modes():
    two_pi = 2.0 * np.pi
    # (g, f) with f' = g; the shear offset is g and the loop Hamiltonian uses f
    return [
        (lambda z: np.sin(two_pi * z), lambda z: -np.cos(two_pi * z) / two_pi),
        (lambda z: np.cos(two_pi * z), lambda z: np.sin(two_pi * z) / two_pi),
        (lambda z: np.sin(2 * two_pi * z), lambda z: -np.cos(2 * two_pi * z) / (2 * two_pi)),
    ]


@dataclass(frozen=True)
class EnergyConfig:
    """Sizes of the candidate family searched by :func:`energy_e0`."""

    reparam_modes: int = 5
    class_offsets: int = 1
    reparam_step: float = 0.2
    loop_step: float = 0.02
    restarts: int = 3
    seed: int = 0

    @property
    def loop_modes(self) -> int:
        return 2 * len(_loop_modes())


@dataclass(frozen=True, eq=False)
class EnergyEstimate:
    upper: float
    lower: float
    candidate: Isotopy
    budget_used: int
    exhausted: bool
    class_shift: tuple = (0, 0)
    parameters: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "budget_used": self.budget_used,
            "exhausted": self.exhausted,
            "class_shift": list(self.class_shift),
            "parameters": [float(v) for v in self.parameters],
        }


class _Family:
    """Candidate representatives of the endpoint of ``target``.

    A parameter vector holds ``k`` reparameterization coefficients ``b_j`` for
    ``s(t) = t + sum_j b_j sin(2 pi j t) / (2 pi j)`` followed by amplitudes of
    shear loops ``x -> x + w(t) g(y)`` and ``y -> y + w(t) g(x)`` with
    ``w(t) = sin^2(pi t)``.  A class shift by an integer vector ``v`` composes
    pointwise with the translation loop ``x -> x + t v``.  Each operation
    keeps the time-1 map.
    """

    def __init__(self, target: Isotopy, config: EnergyConfig):
        self.target = target
        self.config = config
        self.coeffs, self.potentials = target.split
        self.t = target.times
        z = np.arange(target.n) / target.n
        modes = _loop_modes()
        self.g = np.array([g(z) for g, _ in modes])
        self.f = np.array([f(z) for _, f in modes])
        self.w = np.sin(np.pi * self.t) ** 2
        self.dw = np.pi * np.sin(2.0 * np.pi * self.t)
        self._splines = None

    @property
    def size(self) -> int:
        return self.config.reparam_modes + self.config.loop_modes

    def _reparam(self, b: np.ndarray):
        if not np.any(b):
            return self.coeffs, self.potentials
        total = np.abs(b).sum()
        if total > 0.9:
            b = b * (0.9 / total)
        j = np.arange(1, len(b) + 1)
        arg = 2.0 * np.pi * np.outer(self.t, j)
        tau = self.t + (np.sin(arg) / (2.0 * np.pi * j)) @ b
        rate = 1.0 + np.cos(arg) @ b
        if self._splines is None:
            self._splines = time_splines(self.target)
        return resample(self.target, tau, rate, self._splines)

    def _shift(self, coeffs, potentials, shift):
        if not any(shift):
            return coeffs, potentials
        v = np.asarray(shift, dtype=float)
        coeffs = coeffs + flat_covectors(v)
        potentials = translate(potentials, -self.t[:, None] * v[None, :])
        return coeffs, potentials

    def _shear(self, coeffs, potentials, amps, axis):
        if not np.any(amps):
            return potentials
        g = amps @ self.g
        f = amps @ self.f
        offset = self.w[:, None] * g[None, :]
        moved = shear_compose(potentials, -offset, axis)
        if axis == "x":
            # loop generated by w' f(y); pushing H forward adds -p w g(y)
            extra = self.dw[:, None] * f[None, :] - coeffs[:, 0, None] * offset
            return moved + extra[:, None, :]
        extra = -self.dw[:, None] * f[None, :] - coeffs[:, 1, None] * offset
        return moved + extra[:, :, None]

    def build(self, theta: np.ndarray, shift) -> tuple[np.ndarray, np.ndarray]:
        k = self.config.reparam_modes
        coeffs, potentials = self._reparam(theta[:k])
        coeffs, potentials = self._shift(coeffs, potentials, shift)
        amps = theta[k:]
        half = len(amps) // 2
        potentials = self._shear(coeffs, potentials, amps[:half], "x")
        potentials = self._shear(coeffs, potentials, amps[half:], "y")
        return coeffs, potentials

    def length(self, theta, shift) -> float:
        coeffs, potentials = self.build(np.asarray(theta, dtype=float), shift)
        potentials = potentials - potentials.mean(axis=(-2, -1), keepdims=True)
        return sum(_length_terms(coeffs, potentials))


class _BudgetSpent(Exception):
    pass


def energy_e0(
    target: Isotopy,
    budget: int = 200,
    mode: str = "general",
    config: Optional[EnergyConfig] = None,
) -> EnergyEstimate:
    """Bracket the least length of an isotopy to the endpoint of ``target``.

    ``lower`` is the l1 distance from the flux to the lattice, which bounds
    the length of every path to the same endpoint; ``upper`` is the shortest
    candidate found by a seeded Nelder-Mead search within ``budget`` length
    evaluations.  ``mode="hamiltonian_only"`` keeps the class fixed so that a
    Hamiltonian target only sees Hamiltonian candidates.
    """
    if mode not in ("general", "hamiltonian_only"):
        raise ValueError(f"mode must be 'general' or 'hamiltonian_only', got {mode!r}")
    if budget < 1:
        raise ValueError("budget must be a positive number of evaluations")
    config = config or EnergyConfig()
    family = _Family(target, config)
    _, flux = flux_harmonic(target)
    lower, _ = distance_to_lattice(flux)

    r = config.class_offsets if mode == "general" else 0
    shifts = [(i, j) for i in range(-r, r + 1) for j in range(-r, r + 1)]
    shifts.sort(key=lambda s: (abs(s[0]) + abs(s[1]), s))
    theta0 = np.zeros(family.size)

    used = 0
    best = (np.inf, theta0, (0, 0))

    def evaluate(theta, shift):
        nonlocal used, best
        if used >= budget:
            raise _BudgetSpent
        used += 1
        value = family.length(theta, shift)
        if value < best[0]:
            best = (value, np.array(theta, dtype=float), shift)
        return value

    try:
        for shift in shifts:
            evaluate(theta0, shift)
        shift = best[2]
        rng = np.random.default_rng(config.seed)
        steps = np.concatenate([np.full(config.reparam_modes, config.reparam_step), np.full(config.loop_modes, config.loop_step)])
        start = theta0
        for attempt in range(config.restarts + 1):
            simplex = np.vstack([start, start + np.diag(steps)])
            minimize(
                evaluate,
                start,
                args=(shift,),
                method="Nelder-Mead",
                options={"initial_simplex": simplex, "maxfev": budget, "xatol": 1e-7, "fatol": 1e-12},
            )
            start = best[1] + steps * rng.normal(size=family.size) * 0.5
    except _BudgetSpent:
        pass

    upper, theta, shift = best
    # Simpson weights sum to one only up to roundoff, so the two bounds can
    # cross at that level when the class-shifted path is optimal.
    if lower > upper and lower - upper <= 1e-12 * (1.0 + upper):
        upper = lower
    coeffs, potentials = family.build(theta, shift)
    candidate = isotopy_from_split(coeffs, potentials)
    return EnergyEstimate(float(upper), float(lower), candidate, used, used >= budget, shift, theta)


def norm_e(target: Isotopy, budget: int = 200, config: Optional[EnergyConfig] = None) -> float:
    """Symmetrized energy ``(e0(phi) + e0(phi^{-1})) / 2`` from the two upper bounds."""
    forward = energy_e0(target, budget, config=config).upper
    backward = energy_e0(inverse(target), budget, config=config).upper
    return 0.5 * (forward + backward)


def distance_d(phi: Isotopy, psi: Isotopy, budget: int = 200, config: Optional[EnergyConfig] = None) -> float:
    """``e`` of the map ``psi_1^{-1} o phi_1``.

    The representative is the pointwise quotient ``t -> psi_t^{-1} o phi_t``,
    so any common tail appended to both paths cancels frame by frame.  When
    the time grids differ the concatenation of ``phi`` with the inverse of
    ``psi`` is used instead.
    """
    if phi.n != psi.n:
        raise ResolutionMismatch(f"isotopies use different grids n = {phi.n}, {psi.n}")
    if phi.m == psi.m:
        rep = pointwise_quotient(phi, psi)
    else:
        rep = concatenate(phi, inverse(psi))
    return norm_e(rep, budget, config)


def han_norm(target: Isotopy, K: float = 1.0, budget: int = 200, tol: float = 1e-6, config: Optional[EnergyConfig] = None) -> float:
    """``min(||phi||_H, K)`` for Hamiltonian endpoints and ``K`` otherwise."""
    if not K > 0:
        raise ValueError("K must be positive")
    if not is_hamiltonian(target, tol):
        return float(K)
    _, psi = factorize(target)
    estimate = energy_e0(psi, budget, mode="hamiltonian_only", config=config)
    return float(min(estimate.upper, K))


def c0_distance(phi_map: FlowMap, psi_map: FlowMap, phi_inv: FlowMap, psi_inv: FlowMap) -> float:
    """Largest toroidal image distance over the map pair and the inverse pair."""
    if len({phi_map.n, psi_map.n, phi_inv.n, psi_inv.n}) > 1:
        raise ResolutionMismatch("flow maps use different grids")
    forward = toroidal_distance(phi_map.positions, psi_map.positions).max()
    backward = toroidal_distance(phi_inv.positions, psi_inv.positions).max()
    return float(max(forward, backward))


def d_symp(phi: Isotopy, psi: Isotopy) -> float:
    """``sup_t dbar(phi_t, psi_t) + D(Phi, Psi)`` over the time grid."""
    D = iso_distance_D(phi, psi)
    times = phi.times
    paths = [flow_path(iso, times) for iso in (phi, psi, inverse(phi), inverse(psi))]
    sup = max(c0_distance(*(p[k] for p in paths)) for k in range(len(times)))
    return sup + D


def extended_distance(
    phi: Isotopy,
    psi: Isotopy,
    base_norm: Callable[[Isotopy], float],
    tol: float = 1e-6,
) -> float:
    """``|H(Phi_1) - H(Phi_2)| + base_norm(psi_1 psi_2^{-1})`` for a norm on Hamiltonian paths.

    Each flux is first reduced modulo the lattice; ``psi_i`` is reached by
    running the inverse translation of the reduced flux and then ``Phi_i``.
    The composite is only Hamiltonian when both paths lie in the same lattice
    class, since the torus has a nontrivial flux group.
    """
    if phi.n != psi.n:
        raise ResolutionMismatch(f"isotopies use different grids n = {phi.n}, {psi.n}")
    base_at_identity = float(base_norm(Isotopy.zero(phi.n, phi.m)))
    if base_at_identity != 0.0:
        raise BaseNormContract(f"base norm of the identity is {base_at_identity!r}, expected 0")

    reduced = []
    hamiltonian_parts = []
    for iso in (phi, psi):
        _, h = flux_harmonic(iso)
        _, nearest = distance_to_lattice(h)
        red = h.coeffs - nearest
        reduced.append(red)
        undo = harmonic_isotopy(np.tile(-red, (iso.m, 1)), iso.n)
        hamiltonian_parts.append(concatenate(undo, iso, m_out=2 * iso.m - 1))
    a, b = hamiltonian_parts
    composite = concatenate(inverse(b), a, m_out=2 * max(a.m, b.m) - 1)
    _, flux = flux_harmonic(composite)
    if np.abs(flux.coeffs).sum() > tol:
        raise NotHamiltonian(
            f"composite has flux {flux.coeffs.tolist()}: the paths lie in different lattice classes"
        )
    _, ham = factorize(composite)
    return float(np.abs(reduced[0] - reduced[1]).sum() + base_norm(ham))
