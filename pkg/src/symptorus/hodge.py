"""Hodge splitting of closed 1-forms on the flat torus and the induced norms.

On the flat torus the harmonic 1-forms are the constant combinations of the
basis ``(dx, dy)``, so the harmonic part of a closed form is its vector of
grid means and the exact part is recovered by a spectral Poisson solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotClosed
from .grid_calculus import (
    OneForm,
    ScalarField,
    VectorField,
    curl,
    field_from_dict,
    field_to_dict,
    flat,
    gradient,
    osc,
    wavenumbers,
)

__all__ = [
    "CLOSED_TOL",
    "HarmonicForm",
    "HodgeSplit",
    "BASIS",
    "closedness_defect",
    "split_arrays",
    "hodge_decompose",
    "harmonic_norm",
    "field_norm",
    "basis_sup_norms",
]

CLOSED_TOL = 1e-8

# Rows are the (dx, dy) coefficients of the fixed harmonic basis h_1, h_2.
BASIS = np.eye(2)

# Harmonic coefficients at the level of summation roundoff are snapped to 0.
_SNAP = 1e-13


@dataclass(frozen=True, eq=False)
class HarmonicForm:
    """Coefficients against the basis ``(dx, dy)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if coeffs.shape != (2,):
            raise ValueError(f"the flat torus has first Betti number 2, got {coeffs.shape[0]} coefficients")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("harmonic coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    def as_oneform(self, n: int) -> OneForm:
        return OneForm.constant(self.coeffs @ BASIS, n)

    def __add__(self, other: "HarmonicForm") -> "HarmonicForm":
        return HarmonicForm(self.coeffs + other.coeffs)

    def __sub__(self, other: "HarmonicForm") -> "HarmonicForm":
        return HarmonicForm(self.coeffs - other.coeffs)


@dataclass(frozen=True, eq=False)
class HodgeSplit:
    harmonic: HarmonicForm
    potential: ScalarField

    def reconstruct(self) -> OneForm:
        n = self.potential.n
        return OneForm(self.harmonic.as_oneform(n).data + gradient(self.potential.data))

    def to_dict(self) -> dict:
        return {"harmonic": self.harmonic.coeffs.tolist(), "potential": field_to_dict(self.potential)}

    @classmethod
    def from_dict(cls, obj: dict) -> "HodgeSplit":
        potential = field_from_dict(obj["potential"])
        if not isinstance(potential, ScalarField):
            raise ValueError("potential must be a scalar field")
        return cls(HarmonicForm(obj["harmonic"]), potential)


def closedness_defect(forms: np.ndarray) -> float:
    """Largest ``|d alpha|`` over a batch of forms of shape ``(..., 2, n, n)``."""
    return float(np.abs(curl(forms)).max())


def split_arrays(forms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched Hodge split without the closedness check.

    Returns harmonic coefficients ``(..., 2)`` and mean-zero potentials
    ``(..., n, n)``.  For a non-closed input the potential is the
    least-squares exact part.
    """
    forms = np.asarray(forms, dtype=float)
    n = forms.shape[-1]
    coeffs = forms.mean(axis=(-2, -1))
    scale = 1.0 + np.abs(forms).max(axis=(-3, -2, -1))
    coeffs = np.where(np.abs(coeffs) <= _SNAP * scale[..., None], 0.0, coeffs)
    k = wavenumbers(n)
    kx = k[:, None]
    ky = k[None, :]
    k2 = kx**2 + ky**2
    k2[k2 == 0.0] = np.inf
    hat = np.fft.fft2(forms)
    u_hat = -1j * (kx * hat[..., 0, :, :] + ky * hat[..., 1, :, :]) / k2
    potentials = np.fft.ifft2(u_hat).real
    potentials -= potentials.mean(axis=(-2, -1), keepdims=True)
    return coeffs, potentials


def hodge_decompose(alpha: OneForm, tol: float = CLOSED_TOL) -> HodgeSplit:
    """Split a closed 1-form into harmonic coefficients and a mean-zero potential."""
    defect = closedness_defect(alpha.data)
    if defect >= tol:
        raise NotClosed(f"max |d alpha| = {defect:.3e} exceeds {tol:.1e}")
    coeffs, potential = split_arrays(alpha.data)
    return HodgeSplit(HarmonicForm(coeffs), ScalarField(potential))


def harmonic_norm(h: HarmonicForm) -> float:
    """l1 norm of the coefficient vector."""
    return float(np.abs(h.coeffs).sum())


def field_norm(X: VectorField, tol: float = CLOSED_TOL) -> float:
    """``|H| + osc(u)`` for the split ``i_X omega = H + du`` of a symplectic field."""
    split = hodge_decompose(flat(X), tol=tol)
    return harmonic_norm(split.harmonic) + osc(split.potential)


def basis_sup_norms(scale: float = 1.0) -> float:
    """``E = max_i sup_x |h_i(x)|`` with the operator norm taken in the flat metric.

    ``scale`` multiplies the basis and exists for testing homogeneity.
    """
    basis = scale * BASIS
    # a constant covector c has operator norm |c|_2 at every point
    return float(np.linalg.norm(basis, axis=1).max())
