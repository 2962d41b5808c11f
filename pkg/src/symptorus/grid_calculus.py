"""Fields and spectral exterior calculus on the flat torus T^2 = R^2/Z^2.

Samples live on a uniform periodic ``n x n`` grid; ``data[j, k]`` is the value
at ``(x, y) = (j/n, k/n)``, so axis ``-2`` is x and axis ``-1`` is y.  The
symplectic form is ``omega = dx ^ dy``.  With this convention the interior
product of ``X = (a, b)`` is ``i_X omega = a dy - b dx``.

Every derivative is a Fourier multiplier.  The Nyquist mode is dropped from
first derivatives so that ``d`` of a real field stays real and ``d o d``
vanishes identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numba
import numpy as np
from scipy import ndimage

from .errors import ResolutionMismatch

__all__ = [
    "ScalarField",
    "OneForm",
    "VectorField",
    "check_resolution",
    "grid",
    "wavenumbers",
    "gradient",
    "curl",
    "musical",
    "flat",
    "sharp",
    "exterior_derivative",
    "osc",
    "spline_coefficients",
    "evaluate_spline",
    "evaluate_trig",
    "translate",
    "shear_compose",
    "toroidal_distance",
    "field_to_dict",
    "field_from_dict",
]


def check_resolution(n: int) -> int:
    n = int(n)
    if n < 8 or n & (n - 1):
        raise ValueError(f"grid resolution must be a power of two >= 8, got {n}")
    return n


def _check_samples(data: np.ndarray, leading: tuple[int, ...]) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim != len(leading) + 2 or data.shape[: len(leading)] != leading:
        raise ValueError(f"expected samples of shape {leading} + (n, n), got {data.shape}")
    n = data.shape[-1]
    if data.shape[-2] != n:
        raise ResolutionMismatch(f"non-square grid {data.shape[-2:]}")
    check_resolution(n)
    if not np.all(np.isfinite(data)):
        raise ValueError("field samples must be finite")
    return data


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Periodic real function sampled on the ``n x n`` grid."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_samples(self.data, ()))

    @property
    def n(self) -> int:
        return self.data.shape[-1]


@dataclass(frozen=True, eq=False)
class OneForm:
    """``p dx + q dy`` with ``data = stack([p, q])``."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_samples(self.data, (2,)))

    @classmethod
    def from_components(cls, p, q) -> "OneForm":
        p = p.data if isinstance(p, ScalarField) else np.asarray(p, dtype=float)
        q = q.data if isinstance(q, ScalarField) else np.asarray(q, dtype=float)
        if p.shape != q.shape:
            raise ResolutionMismatch(f"component grids differ: {p.shape} vs {q.shape}")
        return cls(np.stack([p, q]))

    @classmethod
    def constant(cls, coeffs, n: int) -> "OneForm":
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(np.broadcast_to(coeffs[:, None, None], (2, n, n)).copy())

    @property
    def n(self) -> int:
        return self.data.shape[-1]

    @property
    def p(self) -> ScalarField:
        return ScalarField(self.data[0])

    @property
    def q(self) -> ScalarField:
        return ScalarField(self.data[1])


@dataclass(frozen=True, eq=False)
class VectorField:
    """``a d/dx + b d/dy`` with ``data = stack([a, b])``."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_samples(self.data, (2,)))

    @classmethod
    def from_components(cls, a, b) -> "VectorField":
        a = a.data if isinstance(a, ScalarField) else np.asarray(a, dtype=float)
        b = b.data if isinstance(b, ScalarField) else np.asarray(b, dtype=float)
        if a.shape != b.shape:
            raise ResolutionMismatch(f"component grids differ: {a.shape} vs {b.shape}")
        return cls(np.stack([a, b]))

    @property
    def n(self) -> int:
        return self.data.shape[-1]

    @property
    def a(self) -> ScalarField:
        return ScalarField(self.data[0])

    @property
    def b(self) -> ScalarField:
        return ScalarField(self.data[1])


Field = Union[ScalarField, OneForm, VectorField]


def grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate arrays ``(X, Y)`` of the sample points."""
    x = np.arange(n) / n
    return np.meshgrid(x, x, indexing="ij")


def wavenumbers(n: int, nyquist: bool = False) -> np.ndarray:
    """Angular wavenumbers ``2 pi k`` in FFT order, Nyquist zeroed unless requested."""
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n)
    if not nyquist:
        k[n // 2] = 0.0
    return k


def _partial(arr: np.ndarray, axis: int) -> np.ndarray:
    n = arr.shape[axis]
    k = 2.0 * np.pi * np.arange(n // 2 + 1)
    k[-1] = 0.0
    shape = [1] * arr.ndim
    shape[axis] = k.size
    hat = np.fft.rfft(arr, axis=axis) * (1j * k.reshape(shape))
    return np.fft.irfft(hat, n=n, axis=axis)


def gradient(u: np.ndarray) -> np.ndarray:
    """Spectral ``(du/dx, du/dy)`` for arrays of shape ``(..., n, n)``."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    kx = wavenumbers(n)[:, None]
    ky = 2.0 * np.pi * np.arange(n // 2 + 1)
    ky[-1] = 0.0
    hat = np.fft.rfft2(u)
    dx = np.fft.irfft2(1j * kx * hat, s=(n, n))
    dy = np.fft.irfft2(1j * ky * hat, s=(n, n))
    return np.stack([dx, dy], axis=-3)


def curl(form: np.ndarray) -> np.ndarray:
    """Coefficient of ``dx ^ dy`` in ``d(p dx + q dy)``, batched over leading axes."""
    return _partial(form[..., 1, :, :], -2) - _partial(form[..., 0, :, :], -1)


def flat(X: VectorField) -> OneForm:
    a, b = X.data
    return OneForm(np.stack([-b, a]))


def sharp(alpha: OneForm) -> VectorField:
    p, q = alpha.data
    return VectorField(np.stack([q, -p]))


def musical(field: Union[OneForm, VectorField], direction: str):
    """Apply the symplectic musical isomorphism (``"flat"``: X -> i_X omega)."""
    if direction == "flat":
        if not isinstance(field, VectorField):
            raise TypeError("flat expects a VectorField")
        return flat(field)
    if direction == "sharp":
        if not isinstance(field, OneForm):
            raise TypeError("sharp expects a OneForm")
        return sharp(field)
    raise ValueError(f"direction must be 'sharp' or 'flat', got {direction!r}")


def exterior_derivative(field: Union[ScalarField, OneForm]):
    """``d`` of a function (a OneForm) or of a 1-form (the ``dx ^ dy`` coefficient)."""
    if isinstance(field, ScalarField):
        return OneForm(gradient(field.data))
    if isinstance(field, OneForm):
        return ScalarField(curl(field.data))
    raise TypeError(f"cannot differentiate {type(field).__name__}")


def osc(u) -> float:
    """Oscillation ``max u - min u`` over grid samples."""
    data = u.data if isinstance(u, ScalarField) else np.asarray(u)
    return float(data.max() - data.min())


# --- off-grid evaluation ---------------------------------------------------


def spline_coefficients(data: np.ndarray) -> np.ndarray:
    """Periodic quintic B-spline coefficients, padded for :func:`evaluate_spline`.

    Accepts ``(..., n, n)`` and returns a contiguous ``(c, n + 5, n + 5)`` stack.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[-1]
    flat_data = data.reshape(-1, n, n)
    coeffs = ndimage.spline_filter1d(flat_data, order=5, axis=-1, mode="grid-wrap")
    coeffs = ndimage.spline_filter1d(coeffs, order=5, axis=-2, mode="grid-wrap")
    return np.ascontiguousarray(np.pad(coeffs, ((0, 0), (2, 3), (2, 3)), mode="wrap"))


@numba.njit(cache=True)
def _quintic_weights(t, w):
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    s = 1.0 - t
    w[0] = s**5 / 120.0
    w[1] = (26.0 - 50.0 * t + 20.0 * t2 + 20.0 * t3 - 20.0 * t4 + 5.0 * t5) / 120.0
    w[2] = (66.0 - 60.0 * t2 + 30.0 * t4 - 10.0 * t5) / 120.0
    w[3] = (26.0 + 50.0 * t + 20.0 * t2 - 20.0 * t3 - 20.0 * t4 + 10.0 * t5) / 120.0
    w[4] = (1.0 + 5.0 * t + 10.0 * t2 + 10.0 * t3 + 5.0 * t4 - 5.0 * t5) / 120.0
    w[5] = t5 / 120.0


@numba.njit(cache=True)
def _spline_kernel(coeffs, px, py, n):
    nc = coeffs.shape[0]
    npt = px.shape[0]
    out = np.empty((nc, npt))
    wu = np.empty(6)
    wv = np.empty(6)
    for p in range(npt):
        u = (px[p] - np.floor(px[p])) * n
        v = (py[p] - np.floor(py[p])) * n
        iu = min(int(u), n - 1)
        iv = min(int(v), n - 1)
        _quintic_weights(u - iu, wu)
        _quintic_weights(v - iv, wv)
        for c in range(nc):
            s = 0.0
            for a in range(6):
                row = coeffs[c, iu + a]
                r = 0.0
                for b in range(6):
                    r += wv[b] * row[iv + b]
                s += wu[a] * r
            out[c, p] = s
    return out


def evaluate_spline(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate every channel of ``coeffs`` at ``points`` of shape ``(P, 2)``.

    Interpolation error is O(h^6) for smooth fields.
    """
    n = coeffs.shape[-1] - 5
    points = np.asarray(points, dtype=float)
    return _spline_kernel(coeffs, np.ascontiguousarray(points[:, 0]), np.ascontiguousarray(points[:, 1]), n)


def evaluate_trig(data: np.ndarray, points: np.ndarray, rtol: float = 1e-14) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``data`` (shape ``(n, n)``) at ``points``.

    Modes below ``rtol`` times the largest coefficient are dropped, which keeps
    the cost proportional to the field's actual bandwidth.
    """
    n = data.shape[-1]
    points = np.asarray(points, dtype=float)
    hat = np.fft.fft2(data) / n**2
    scale = np.abs(hat).max()
    if scale == 0.0:
        return np.zeros(len(points))
    ks = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    mask = np.abs(hat) > rtol * scale
    band = int(max(np.abs(ks[np.any(mask, axis=1)]).max(), np.abs(ks[np.any(mask, axis=0)]).max()))
    sel = np.abs(ks) <= band
    kx = ks[sel]
    sub = hat[np.ix_(sel, sel)]
    ex = np.exp(2j * np.pi * np.outer(points[:, 0], kx))
    ey = np.exp(2j * np.pi * np.outer(points[:, 1], kx))
    return np.einsum("pk,pk->p", ex @ sub, ey).real


def translate(data: np.ndarray, shift) -> np.ndarray:
    """Samples of ``u(x + shift)`` computed by a Fourier phase shift.

    ``data`` has shape ``(..., n, n)`` and ``shift`` broadcasts against ``(..., 2)``.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[-1]
    shift = np.asarray(shift, dtype=float)
    k = wavenumbers(n, nyquist=True)
    sx = shift[..., 0][..., None, None]
    sy = shift[..., 1][..., None, None]
    phase = np.exp(1j * (k[:, None] * sx + k[None, :] * sy))
    return np.fft.ifft2(np.fft.fft2(data) * phase).real


def shear_compose(data: np.ndarray, offset: np.ndarray, axis: str) -> np.ndarray:
    """Samples of ``u(x + s(y), y)`` (``axis="x"``) or ``u(x, y + s(x))`` (``axis="y"``).

    ``offset`` holds ``s`` sampled on the grid coordinate it depends on; it may
    carry the same leading axes as ``data``.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[-1]
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
    offset = np.asarray(offset, dtype=float)
    if axis == "x":
        phase = np.exp(1j * k[:, None] * offset[..., None, :])
        return np.fft.irfft(np.fft.rfft(data, axis=-2) * phase, n=n, axis=-2)
    if axis == "y":
        phase = np.exp(1j * offset[..., :, None] * k[None, :])
        return np.fft.irfft(np.fft.rfft(data, axis=-1) * phase, n=n, axis=-1)
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def toroidal_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Flat distance on R^2/Z^2 between point arrays of shape ``(..., 2)``."""
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    d = np.minimum(d, 1.0 - d)
    return np.sqrt((d**2).sum(axis=-1))


# --- JSON ------------------------------------------------------------------

_KINDS = {"scalar": ScalarField, "oneform": OneForm, "vectorfield": VectorField}


def field_to_dict(field: Field) -> dict:
    kind = {ScalarField: "scalar", OneForm: "oneform", VectorField: "vectorfield"}[type(field)]
    if kind == "scalar":
        data = field.data.ravel().tolist()
    else:
        data = [c.ravel().tolist() for c in field.data]
    return {"kind": kind, "n": field.n, "data": data}


def field_from_dict(obj: dict) -> Field:
    try:
        kind = obj["kind"]
        n = check_resolution(obj["n"])
        cls = _KINDS[kind]
        data = np.asarray(obj["data"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed field object: {exc}") from exc
    if kind == "scalar":
        if data.size != n * n:
            raise ResolutionMismatch(f"scalar field with n={n} needs {n * n} samples, got {data.size}")
        return cls(data.reshape(n, n))
    if data.ndim != 2 or data.shape != (2, n * n):
        raise ResolutionMismatch(f"{kind} with n={n} needs two arrays of {n * n} samples")
    return cls(data.reshape(2, n, n))
