"""Symplectic isotopies stored as generator paths, and the maps they generate.

An isotopy is a uniform time grid ``t_k = k/(m-1)`` of closed 1-forms
``i_{X_t} omega``, where ``X_t`` is the right-invariant velocity
``(d phi_t/dt) o phi_t^{-1}``.  Between grid times the generator is interpolated by
local cubic Lagrange polynomials; :func:`flow` integrates it with fixed-step
RK4 using four substeps per frame interval and periodic quintic B-spline
interpolation in space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NotClosed, NotHarmonic, ResolutionMismatch
from .grid_calculus import (
    OneForm,
    ScalarField,
    check_resolution,
    evaluate_spline,
    evaluate_trig,
    field_from_dict,
    field_to_dict,
    gradient,
    grid,
    spline_coefficients,
    toroidal_distance,
    translate,
)
from .hodge import CLOSED_TOL, closedness_defect, split_arrays

__all__ = [
    "Isotopy",
    "FlowMap",
    "BumpReparam",
    "SUBSTEPS",
    "sharp_vectors",
    "flat_covectors",
    "harmonic_isotopy",
    "hamiltonian_isotopy",
    "isotopy_from_split",
    "harmonic_translation",
    "time_stencil",
    "interpolate_path",
    "integrate_path",
    "knot_integrals",
    "translation_map",
    "flow",
    "flow_path",
    "flow_points",
    "inverse",
    "concatenate",
    "factorize",
    "pullback",
    "pointwise_quotient",
    "resample",
    "time_splines",
    "max_displacement",
]

SUBSTEPS = 4


def sharp_vectors(coeffs: np.ndarray) -> np.ndarray:
    """Vectors ``(q, -p)`` of constant covectors ``p dx + q dy`` (last axis)."""
    coeffs = np.asarray(coeffs, dtype=float)
    return np.stack([coeffs[..., 1], -coeffs[..., 0]], axis=-1)


def flat_covectors(vectors: np.ndarray) -> np.ndarray:
    """Inverse of :func:`sharp_vectors`."""
    vectors = np.asarray(vectors, dtype=float)
    return np.stack([-vectors[..., 1], vectors[..., 0]], axis=-1)


@dataclass(frozen=True, eq=False)
class Isotopy:
    """Generator path of a symplectic isotopy, ``frames`` of shape ``(m, 2, n, n)``."""

    frames: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim != 4 or frames.shape[1] != 2 or frames.shape[2] != frames.shape[3]:
            raise ValueError(f"frames must have shape (m, 2, n, n), got {frames.shape}")
        check_resolution(frames.shape[-1])
        m = frames.shape[0]
        if m < 17 or (m - 1) % 2:
            raise ValueError(f"need m >= 17 time samples with m - 1 even, got m = {m}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("isotopy frames must be finite")
        defect = closedness_defect(frames)
        if defect >= CLOSED_TOL:
            raise NotClosed(f"isotopy frame is not closed: max |d alpha| = {defect:.3e}")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def n(self) -> int:
        return self.frames.shape[-1]

    @property
    def m(self) -> int:
        return self.frames.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m)

    def frame(self, k: int) -> OneForm:
        return OneForm(self.frames[k])

    @cached_property
    def split(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-frame harmonic coefficients ``(m, 2)`` and potentials ``(m, n, n)``."""
        return split_arrays(self.frames)

    @property
    def harmonic_coeffs(self) -> np.ndarray:
        return self.split[0]

    @property
    def potentials(self) -> np.ndarray:
        return self.split[1]

    @classmethod
    def zero(cls, n: int, m: int) -> "Isotopy":
        return cls(np.zeros((m, 2, n, n)))

    def scaled(self, factor: float) -> "Isotopy":
        return Isotopy(factor * self.frames)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "frames": [field_to_dict(self.frame(k)) for k in range(self.m)],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Isotopy":
        try:
            n, m, frames = int(obj["n"]), int(obj["m"]), obj["frames"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed isotopy object: {exc}") from exc
        if len(frames) != m:
            raise ValueError(f"isotopy declares m={m} but carries {len(frames)} frames")
        forms = [field_from_dict(f) for f in frames]
        if any(not isinstance(f, OneForm) for f in forms):
            raise ValueError("isotopy frames must be one-forms")
        if any(f.n != n for f in forms):
            raise ResolutionMismatch(f"isotopy declares n={n} but a frame has a different resolution")
        return cls(np.stack([f.data for f in forms]))


def _require_same_grid(*isos: Isotopy, same_m: bool = False) -> None:
    ns = {iso.n for iso in isos}
    if len(ns) > 1:
        raise ResolutionMismatch(f"isotopies use different grids n = {sorted(ns)}")
    if same_m and len({iso.m for iso in isos}) > 1:
        raise ResolutionMismatch(f"isotopies use different time grids m = {sorted({iso.m for iso in isos})}")


def isotopy_from_split(coeffs: np.ndarray, potentials: np.ndarray) -> Isotopy:
    """Isotopy with frames ``H_t + d u_t``."""
    coeffs = np.asarray(coeffs, dtype=float)
    potentials = np.asarray(potentials, dtype=float)
    return Isotopy(coeffs[:, :, None, None] + gradient(potentials))


def harmonic_isotopy(coeff_path, n: int) -> Isotopy:
    """Isotopy with constant frames ``sum_i lambda_i(t) h_i``."""
    coeff_path = np.asarray(coeff_path, dtype=float)
    if coeff_path.ndim != 2 or coeff_path.shape[1] != 2:
        raise ValueError(f"coefficient path must have shape (m, 2), got {coeff_path.shape}")
    frames = np.broadcast_to(coeff_path[:, :, None, None], coeff_path.shape + (n, n)).copy()
    return Isotopy(frames)


def hamiltonian_isotopy(u_path) -> Isotopy:
    """Isotopy with exact frames ``d u_t``."""
    if not isinstance(u_path, np.ndarray):
        u_path = np.stack([u.data if isinstance(u, ScalarField) else np.asarray(u) for u in u_path])
    return Isotopy(gradient(np.asarray(u_path, dtype=float)))


# --- maps --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FlowMap:
    """Images of the grid points under a map, as lifted coordinates ``(n, n, 2)``."""

    positions: np.ndarray
    jacobians: Optional[np.ndarray] = None

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float)
        n = positions.shape[0]
        if positions.shape != (n, n, 2):
            raise ValueError(f"positions must have shape (n, n, 2), got {positions.shape}")
        if not np.all(np.isfinite(positions)):
            raise ValueError("flow positions must be finite")
        object.__setattr__(self, "positions", positions)
        if self.jacobians is not None:
            jac = np.asarray(self.jacobians, dtype=float)
            if jac.shape != (n, n, 2, 2):
                raise ValueError(f"jacobians must have shape (n, n, 2, 2), got {jac.shape}")
            object.__setattr__(self, "jacobians", jac)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def wrapped(self) -> np.ndarray:
        return self.positions % 1.0

    @property
    def displacement(self) -> np.ndarray:
        X, Y = grid(self.n)
        return self.positions - np.stack([X, Y], axis=-1)

    @classmethod
    def identity(cls, n: int) -> "FlowMap":
        X, Y = grid(n)
        return cls(np.stack([X, Y], axis=-1), np.broadcast_to(np.eye(2), (n, n, 2, 2)).copy())

    def to_dict(self) -> dict:
        return {"n": self.n, "positions": self.wrapped.reshape(-1, 2).tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "FlowMap":
        n = check_resolution(obj["n"])
        positions = np.asarray(obj["positions"], dtype=float)
        if positions.shape != (n * n, 2):
            raise ResolutionMismatch(f"flow map with n={n} needs {n * n} positions")
        return cls(positions.reshape(n, n, 2))


def max_displacement(a: FlowMap | np.ndarray, b: FlowMap | np.ndarray) -> float:
    """Largest toroidal distance between corresponding image points."""
    pa = a.positions if isinstance(a, FlowMap) else a
    pb = b.positions if isinstance(b, FlowMap) else b
    return float(toroidal_distance(pa, pb).max())


def translation_map(n: int, shift) -> FlowMap:
    X, Y = grid(n)
    shift = np.asarray(shift, dtype=float)
    return FlowMap(np.stack([X + shift[0], Y + shift[1]], axis=-1), np.broadcast_to(np.eye(2), (n, n, 2, 2)).copy())


def time_stencil(m: int, tau: float, interval: Optional[int] = None) -> tuple[int, np.ndarray]:
    """Four-point Lagrange stencil for a path sampled at ``t_k = k/(m-1)``.

    Returns the first index ``j0`` and weights for samples ``j0..j0+3``.  The
    stencil depends only on the frame interval containing ``tau`` (or the one
    given), so the interpolant is exact at the samples and cubic in between.
    """
    pos = tau * (m - 1)
    k = min(int(np.floor(pos)), m - 2) if interval is None else interval
    j0 = min(max(k - 1, 0), m - 4)
    x = pos - j0
    nodes = np.arange(4.0)
    w = np.ones(4)
    for i in range(4):
        for j in range(4):
            if i != j:
                w[i] *= (x - nodes[j]) / (nodes[i] - nodes[j])
    return j0, w


def interpolate_path(values: np.ndarray, tau: float, interval: Optional[int] = None) -> np.ndarray:
    """Value at ``tau`` of the piecewise-cubic interpolant used by :func:`flow`."""
    j0, w = time_stencil(values.shape[0], tau, interval)
    return np.tensordot(w, values[j0 : j0 + 4], axes=1)


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(3)


def _interval_integral(values: np.ndarray, k: int, start: float, stop: float) -> np.ndarray:
    half = 0.5 * (stop - start)
    total = np.zeros(values.shape[1:])
    for gx, gw in zip(_GAUSS_X, _GAUSS_W):
        total = total + half * gw * interpolate_path(values, start + half * (1.0 + gx), k)
    return total


def knot_integrals(values: np.ndarray) -> np.ndarray:
    """Integrals of the interpolant of ``values`` from 0 to each sample time."""
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    dt = 1.0 / (m - 1)
    out = np.zeros_like(values)
    for k in range(m - 1):
        out[k + 1] = out[k] + _interval_integral(values, k, k * dt, (k + 1) * dt)
    return out


def integrate_path(values: np.ndarray, t: float, knots: Optional[np.ndarray] = None) -> np.ndarray:
    """Exact integral over ``[0, t]`` of the interpolant of ``values``."""
    values = np.asarray(values, dtype=float)
    if knots is None:
        knots = knot_integrals(values)
    m = values.shape[0]
    dt = 1.0 / (m - 1)
    k = min(int(np.floor(t * (m - 1))), m - 2)
    if t - k * dt <= 0.0:
        return knots[k].copy()
    return knots[k] + _interval_integral(values, k, k * dt, t)


def harmonic_translation(coeff_path: np.ndarray, t: float, knots: Optional[np.ndarray] = None) -> np.ndarray:
    """Translation vector of the harmonic isotopy with coefficients ``coeff_path`` at time ``t``.

    Exact for the time interpolant used by :func:`flow`.
    """
    return sharp_vectors(integrate_path(coeff_path, t, knots))


def _velocity_stack(iso: Isotopy, with_jacobian: bool) -> np.ndarray:
    p = iso.frames[:, 0]
    q = iso.frames[:, 1]
    comps = [q, -p]
    if with_jacobian:
        dq = gradient(q)
        dp = gradient(p)
        # rows of D X for X = (q, -p)
        comps += [dq[:, 0], dq[:, 1], -dp[:, 0], -dp[:, 1]]
    stacked = np.stack(comps, axis=1)
    return np.stack([spline_coefficients(stacked[k]) for k in range(iso.m)])


def _integrate(iso: Isotopy, times: Sequence[float], points: np.ndarray, with_jacobian: bool):
    """RK4 along the generator; returns ``[(positions, jacobians | None), ...]`` per time."""
    times = [float(t) for t in times]
    if any(t < 0.0 or t > 1.0 for t in times):
        raise ValueError("flow times must lie in [0, 1]")
    order = np.argsort(times, kind="stable")
    coeffs = _velocity_stack(iso, with_jacobian)
    m = iso.m
    dt = 1.0 / (m - 1)
    h = dt / SUBSTEPS
    nsteps = (m - 1) * SUBSTEPS
    npts = points.shape[0]
    cache: dict = {}

    def field_at(step_index: int, frac: float):
        key = (step_index, frac)
        if key not in cache:
            if len(cache) > 8:
                cache.clear()
            k = min(step_index // SUBSTEPS, m - 2)
            cache[key] = interpolate_path(coeffs, (step_index + frac) * h, k)
        return cache[key]

    def rhs(step_index: int, frac: float, x, J):
        v = evaluate_spline(field_at(step_index, frac), x)
        dx = v[:2].T
        if J is None:
            return dx, None
        D = v[2:].T.reshape(npts, 2, 2)
        return dx, D @ J

    def rk4(step_index: int, x, J, span: float):
        # span is the fraction of a full substep being taken
        k1, j1 = rhs(step_index, 0.0, x, J)
        half = 0.5 * span
        k2, j2 = rhs(step_index, half, x + half * h * k1, None if J is None else J + half * h * j1)
        k3, j3 = rhs(step_index, half, x + half * h * k2, None if J is None else J + half * h * j2)
        k4, j4 = rhs(step_index, span, x + span * h * k3, None if J is None else J + span * h * j3)
        x_new = x + span * h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        J_new = None if J is None else J + span * h / 6.0 * (j1 + 2 * j2 + 2 * j3 + j4)
        return x_new, J_new

    x = np.array(points, dtype=float)
    J = np.broadcast_to(np.eye(2), (npts, 2, 2)).copy() if with_jacobian else None
    results: list = [None] * len(times)
    step = 0
    for idx in order:
        target = times[idx] * nsteps
        while step + 1 <= target + 1e-9:
            x, J = rk4(step, x, J, 1.0)
            step += 1
        frac = target - step
        if frac > 1e-9 and step < nsteps:
            xp, Jp = rk4(step, x, J, frac)
            results[idx] = (xp, Jp)
        else:
            results[idx] = (x.copy(), None if J is None else J.copy())
    return results


def _grid_points(n: int) -> np.ndarray:
    X, Y = grid(n)
    return np.stack([X, Y], axis=-1).reshape(-1, 2)


def flow_points(iso: Isotopy, times, points: np.ndarray, with_jacobian: bool = False):
    """Flow arbitrary ``points`` (shape ``(P, 2)``) to each time in ``times``."""
    scalar = np.isscalar(times)
    res = _integrate(iso, [times] if scalar else list(times), np.asarray(points, dtype=float), with_jacobian)
    if not with_jacobian:
        res = [r[0] for r in res]
    return res[0] if scalar else res


def flow_path(iso: Isotopy, times: Iterable[float], with_jacobian: bool = False) -> list[FlowMap]:
    """Grid flow maps at several times from a single integration."""
    n = iso.n
    res = _integrate(iso, list(times), _grid_points(n), with_jacobian)
    return [FlowMap(x.reshape(n, n, 2), None if J is None else J.reshape(n, n, 2, 2)) for x, J in res]


def flow(iso: Isotopy, t: float, with_jacobian: bool = False) -> FlowMap:
    """The map ``phi_t`` sampled on the grid."""
    return flow_path(iso, [t], with_jacobian)[0]


# --- algebra of isotopies ------------------------------------------------------


def pullback(iso: Isotopy, coeffs: np.ndarray, potentials: np.ndarray, maps: Optional[list[FlowMap]] = None):
    """Pull the closed forms ``H_k + d u_k`` back by ``phi_{t_k}``.

    For ``phi`` isotopic to the identity through the lift ``phi~``,
    ``phi^*(H + du) = H + d(H . (phi~(x) - x) + u o phi)``; the result is
    returned in split form so that it is closed by construction.
    """
    if maps is None:
        maps = flow_path(iso, iso.times)
    n = iso.n
    out = np.empty((len(maps), n, n))
    for k, fm in enumerate(maps):
        disp = fm.displacement
        shifted = evaluate_trig(potentials[k], fm.positions.reshape(-1, 2)).reshape(n, n)
        out[k] = disp[..., 0] * coeffs[k, 0] + disp[..., 1] * coeffs[k, 1] + shifted
    return np.asarray(coeffs, dtype=float).copy(), out


def inverse(iso: Isotopy) -> Isotopy:
    """Generator path of ``t -> phi_t^{-1}``, namely ``-phi_t^*(i_{X_t} omega)``."""
    if is_harmonic(iso, tol=0.0):
        # translations commute, so the inverse path is generated by -H_t
        return Isotopy(-iso.frames)
    coeffs, potentials = iso.split
    c, u = pullback(iso, coeffs, potentials)
    return isotopy_from_split(-c, -u)


def pointwise_quotient(phi: Isotopy, psi: Isotopy) -> Isotopy:
    """Generator path of ``t -> psi_t^{-1} o phi_t``, i.e. ``psi_t^*(alpha_t - beta_t)``."""
    _require_same_grid(phi, psi, same_m=True)
    ca, ua = phi.split
    cb, ub = psi.split
    c, u = pullback(psi, ca - cb, ua - ub)
    return isotopy_from_split(c, u)


@dataclass(frozen=True)
class BumpReparam:
    """Increasing ``a: [0,1] -> [0,1]``, zero on ``[0, eps)`` and one on ``(1 - eps, 1]``.

    The ramp is the degree-7 smoothstep, whose first three derivatives vanish at
    both junctions.
    """

    epsilon: float = 0.125

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.125:
            raise ValueError(f"epsilon must lie in (0, 1/8], got {self.epsilon}")

    def _ramp(self, s):
        width = 1.0 - 2.0 * self.epsilon
        return np.clip((np.asarray(s, dtype=float) - self.epsilon) / width, 0.0, 1.0), width

    def value(self, s):
        x, _ = self._ramp(s)
        return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)

    def derivative(self, s):
        x, width = self._ramp(s)
        return 140.0 * x**3 * (1.0 - x) ** 3 / width

    def table(self, k: int = 65) -> np.ndarray:
        return self.value(np.linspace(0.0, 1.0, k))


def time_splines(iso: Isotopy) -> tuple[CubicSpline, CubicSpline]:
    """Cubic splines in time through the harmonic coefficients and the potentials."""
    coeffs, potentials = iso.split
    return CubicSpline(iso.times, coeffs, axis=0), CubicSpline(iso.times, potentials, axis=0)


def resample(iso: Isotopy, taus, rates, splines=None) -> tuple[np.ndarray, np.ndarray]:
    """Split form of ``rate(t) * alpha_{tau(t)}`` using cubic-spline time interpolation."""
    c_spline, u_spline = splines or time_splines(iso)
    taus = np.clip(np.asarray(taus, dtype=float), 0.0, 1.0)
    rates = np.asarray(rates, dtype=float)
    return c_spline(taus) * rates[:, None], u_spline(taus) * rates[:, None, None]


CONCAT_MIN_FRAMES = 513


def concatenate(phi: Isotopy, psi: Isotopy, reparam: Optional[BumpReparam] = None, m_out: Optional[int] = None) -> Isotopy:
    """``Phi * Psi``: run ``Phi`` on ``[0, 1/2]`` then ``Psi`` on ``[1/2, 1]``.

    The frames are ``lambda'(t) alpha_{lambda(t)}`` and ``mu'(t) beta_{mu(t)}``
    with ``lambda(t) = a(2t)`` and ``mu(t) = a(2t - 1)``.  Because the
    generators are right-invariant, the second half realises
    ``psi_{mu(t)} o phi_1`` and the endpoint is ``psi_1 o phi_1``.
    """
    _require_same_grid(phi, psi)
    reparam = reparam or BumpReparam()
    min_m = 2 * max(phi.m, psi.m) - 1
    # the bump ramps are steep, so the output spacing is capped at 1/512
    m_out = m_out or max(2 * min_m - 1, CONCAT_MIN_FRAMES)
    if m_out < min_m or (m_out - 1) % 4:
        raise ValueError(f"m_out must be >= {min_m} with m_out - 1 divisible by 4, got {m_out}")
    t = np.linspace(0.0, 1.0, m_out)
    half = (m_out - 1) // 2
    first, second = t[: half + 1], t[half:]
    c1, u1 = resample(phi, reparam.value(2 * first), 2 * reparam.derivative(2 * first))
    c2, u2 = resample(psi, reparam.value(2 * second - 1), 2 * reparam.derivative(2 * second - 1))
    coeffs = np.concatenate([c1, c2[1:]])
    potentials = np.concatenate([u1, u2[1:]])
    return isotopy_from_split(coeffs, potentials)


def factorize(iso: Isotopy) -> tuple[Isotopy, Isotopy]:
    """Split ``phi_t = rho_t o psi_t`` with ``rho`` harmonic and ``psi`` Hamiltonian.

    ``rho`` has the harmonic parts of the frames; on the flat torus it is the
    translation by the time integral of their sharps, so ``psi`` is generated
    by ``u_t o rho_t`` with ``u_t`` the potential of frame ``t``.
    """
    coeffs, potentials = iso.split
    rho = harmonic_isotopy(coeffs, iso.n)
    knots = knot_integrals(coeffs)
    shifts = np.stack([harmonic_translation(coeffs, t, knots) for t in iso.times])
    psi = hamiltonian_isotopy(translate(potentials, shifts))
    return rho, psi


def is_harmonic(iso: Isotopy, tol: float = 1e-10) -> bool:
    return float(np.abs(iso.potentials).max()) <= tol


def harmonic_flow(iso: Isotopy, t: float, tol: float = 1e-10) -> FlowMap:
    """Closed-form flow of a harmonic isotopy (a translation)."""
    if not is_harmonic(iso, tol):
        raise NotHarmonic("isotopy has a nonzero exact part")
    return translation_map(iso.n, harmonic_translation(iso.harmonic_coeffs, t))
