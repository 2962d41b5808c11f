"""Deformation of a harmonic isotopy through constant fields, and the estimates it satisfies.

For a harmonic path with coefficients ``lambda(t)`` and ``Lambda(t) = int_0^t
lambda``, the two-parameter field ``Z_(s,t)`` has ``i_Z omega = t lambda(st) -
2 s Lambda(t)``.  Every ``Z`` is constant on the flat torus, so its ``s``-flow
``G_(s,t)`` is the translation by the sharp of ``Lambda(st) - s^2 Lambda(t)``
and ``V_(s,t)`` is the ``t``-derivative of that vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import NotHarmonic
from .flux import time_integral
from .grid_calculus import ScalarField, VectorField, gradient
from .hodge import basis_sup_norms
from .isotopy import (
    FlowMap,
    Isotopy,
    flow,
    integrate_path,
    interpolate_path,
    is_harmonic,
    knot_integrals,
    max_displacement,
    sharp_vectors,
    translation_map,
)

__all__ = [
    "DeformationState",
    "PropositionReport",
    "EstimateReport",
    "deformation_Z",
    "integrate_G",
    "hamiltonian_w",
    "verify_proposition",
    "verify_estimate",
]

HARMONIC_TOL = 1e-10


def _require_harmonic(rho: Isotopy) -> None:
    if not is_harmonic(rho, HARMONIC_TOL):
        raise NotHarmonic("the deformation needs a harmonic isotopy (constant frames)")


def _check_samples(count: int, name: str) -> int:
    if count < 17 or count % 2 == 0:
        raise ValueError(f"{name} must be odd and >= 17, got {count}")
    return int(count)


class _Path:
    """The coefficient path of a harmonic isotopy and its running integral."""

    def __init__(self, rho: Isotopy):
        self.values = rho.harmonic_coeffs
        self.knots = knot_integrals(self.values)

    def at(self, t: float) -> np.ndarray:
        return interpolate_path(self.values, t)

    def integral(self, t: float) -> np.ndarray:
        return integrate_path(self.values, t, self.knots)


def _z_coeffs(path: _Path, s: float, t: float) -> np.ndarray:
    return t * path.at(s * t) - 2.0 * s * path.integral(t)


def deformation_Z(rho: Isotopy, s: float, t: float) -> VectorField:
    """The constant field ``Z_(s,t)``."""
    _require_harmonic(rho)
    vec = sharp_vectors(_z_coeffs(_Path(rho), s, t))
    return VectorField(np.broadcast_to(vec[:, None, None], (2, rho.n, rho.n)).copy())


@dataclass(frozen=True, eq=False)
class DeformationState:
    """Tables over the ``(s, t)`` grid; all fields are constant, so vectors are stored."""

    rho: Isotopy
    s: np.ndarray
    t: np.ndarray
    z_coeffs: np.ndarray  # (S, T, 2) coefficients of i_Z omega
    shifts: np.ndarray  # (S, T, 2) translation vectors of G
    velocities: np.ndarray  # (S, T, 2) the constant vectors V
    w: np.ndarray  # (T, n, n) samples of w_t

    @property
    def n(self) -> int:
        return self.rho.n

    @property
    def s_samples(self) -> int:
        return len(self.s)

    @property
    def t_samples(self) -> int:
        return len(self.t)

    def _constant(self, vec) -> VectorField:
        return VectorField(np.broadcast_to(np.asarray(vec)[:, None, None], (2, self.n, self.n)).copy())

    def Z(self, i: int, j: int) -> VectorField:
        return self._constant(sharp_vectors(self.z_coeffs[i, j]))

    def G(self, i: int, j: int) -> FlowMap:
        return translation_map(self.n, self.shifts[i, j])

    def V(self, i: int, j: int) -> VectorField:
        return self._constant(self.velocities[i, j])

    def w_field(self, j: int) -> ScalarField:
        return ScalarField(self.w[j])


def _t_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """Second-order differences along axis 1, one-sided at the ends."""
    out = np.empty_like(values)
    out[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * dt)
    out[:, 0] = (-3.0 * values[:, 0] + 4.0 * values[:, 1] - values[:, 2]) / (2.0 * dt)
    out[:, -1] = (3.0 * values[:, -1] - 4.0 * values[:, -2] + values[:, -3]) / (2.0 * dt)
    return out


def _pairing_integral(z_coeffs: np.ndarray, velocities: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``int_0^1 omega(Z, V) ds`` per ``t``; ``omega(Z, V) = (i_Z omega)(V)``."""
    pairing = (z_coeffs * velocities).sum(axis=-1)
    return simpson(pairing, x=s, axis=0)


def integrate_G(rho: Isotopy, s_samples: int = 33, t_samples: int = 33) -> DeformationState:
    """Tabulate ``Z``, ``G``, ``V`` and ``w`` on a uniform ``(s, t)`` grid."""
    _require_harmonic(rho)
    S = _check_samples(s_samples, "s_samples")
    T = _check_samples(t_samples, "t_samples")
    path = _Path(rho)
    s = np.linspace(0.0, 1.0, S)
    t = np.linspace(0.0, 1.0, T)
    z = np.empty((S, T, 2))
    shifts = np.empty((S, T, 2))
    for j, tj in enumerate(t):
        total = path.integral(tj)
        for i, si in enumerate(s):
            z[i, j] = tj * path.at(si * tj) - 2.0 * si * total
            shifts[i, j] = sharp_vectors(path.integral(si * tj) - si * si * total)
    # G is a translation, so V = (dG/dt) o G^{-1} is the t-derivative of its vector
    velocities = _t_derivative(shifts, t[1] - t[0])
    state = DeformationState(rho, s, t, z, shifts, velocities, np.zeros((T, rho.n, rho.n)))
    return DeformationState(rho, s, t, z, shifts, velocities, hamiltonian_w(state))


def hamiltonian_w(state: DeformationState) -> np.ndarray:
    """Mean-zero samples of ``w_t = int_0^1 omega(Z_(s,t), V_(s,t)) ds``, shape ``(T, n, n)``."""
    values = _pairing_integral(state.z_coeffs, state.velocities, state.s)
    w = np.broadcast_to(values[:, None, None], (len(state.t), state.n, state.n)).copy()
    return w - w.mean(axis=(-2, -1), keepdims=True)


@dataclass(frozen=True)
class PropositionReport:
    residual: float
    tol: float
    passed: bool
    zero_average: float
    endpoint_displacement: float
    is_loop: bool
    transport_residual: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def proposition_residual(state: DeformationState) -> float:
    """``max_t |i(V_(1,t)) omega - d w_t|``."""
    v1 = state.velocities[-1]  # (T, 2)
    flat_v = np.stack([-v1[:, 1], v1[:, 0]], axis=-1)
    dw = gradient(state.w)  # (T, 2, n, n)
    return float(np.abs(flat_v[:, :, None, None] - dw).max())


def zero_average(state: DeformationState) -> float:
    """``max_t |int_0^1 i(Z_(s,t)) omega ds|``; also the flux of each path ``s -> G_(s,t)``.

    The coefficients are cubic in ``s`` between the points where ``s t`` crosses
    a time knot, so 3-point Gauss on those pieces integrates them exactly.
    """
    path = _Path(state.rho)
    knots = np.linspace(0.0, 1.0, path.values.shape[0])
    nodes, weights = np.polynomial.legendre.leggauss(3)
    worst = 0.0
    for t in state.t[1:]:
        edges = np.unique(np.concatenate([[0.0, 1.0], knots[knots < t] / t]))
        total = np.zeros(2)
        for a, b in zip(edges[:-1], edges[1:]):
            for x, w in zip(nodes, weights):
                total += 0.5 * (b - a) * w * _z_coeffs(path, 0.5 * (a + b) + 0.5 * (b - a) * x, t)
        worst = max(worst, float(np.abs(total).max()))
    return worst


def transport_residual(state: DeformationState) -> float:
    """``max |dV/ds - dZ/dt|`` over interior nodes; the bracket term vanishes for constant fields."""
    ds = state.s[1] - state.s[0]
    dt = state.t[1] - state.t[0]
    z_vec = sharp_vectors(state.z_coeffs)
    dv_ds = (state.velocities[2:, 1:-1] - state.velocities[:-2, 1:-1]) / (2.0 * ds)
    dz_dt = (z_vec[1:-1, 2:] - z_vec[1:-1, :-2]) / (2.0 * dt)
    return float(np.abs(dv_ds - dz_dt).max())


def verify_proposition(rho: Isotopy, tol: float = 1e-3, s_samples: int = 33, t_samples: int = 33) -> PropositionReport:
    """Check that ``w_t`` is a Hamiltonian for ``V_(1,t)`` and collect the side identities."""
    state = integrate_G(rho, s_samples, t_samples)
    residual = proposition_residual(state)
    total = rho.harmonic_coeffs
    flux = time_integral(total)
    is_loop = bool(np.abs(flux - np.round(flux)).max() < 1e-9)
    endpoint = max_displacement(state.G(-1, -1), flow(rho, 1.0))
    return PropositionReport(
        residual=residual,
        tol=tol,
        passed=bool(residual < tol),
        zero_average=zero_average(state),
        endpoint_displacement=endpoint,
        is_loop=is_loop,
        transport_residual=transport_residual(state),
    )


@dataclass(frozen=True)
class EstimateReport:
    E: float
    A: float
    eta: float
    osc_w_max: float
    bound: float
    satisfied: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_estimate(rho: Isotopy, s_samples: int = 33, t_samples: int = 33, slack: float = 1e-2) -> EstimateReport:
    """Measure ``E``, ``A = sup |V|``, ``eta = int |H_t| dt`` and test ``osc(w_t) <= 4 A E eta``."""
    state = integrate_G(rho, s_samples, t_samples)
    E = basis_sup_norms()
    A = float(np.linalg.norm(state.velocities, axis=-1).max())
    eta = float(time_integral(np.abs(rho.harmonic_coeffs).sum(axis=-1)))
    osc_w = float((state.w.max(axis=(-2, -1)) - state.w.min(axis=(-2, -1))).max())
    bound = 4.0 * A * E * eta
    return EstimateReport(E, A, eta, osc_w, bound, bool(osc_w <= bound * (1.0 + slack)))
