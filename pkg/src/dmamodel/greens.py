"""Green's function kernels for z-directed magnetic dipoles.

Waveguide kernels take points in the guide-local frame (corner at the origin,
x along the guide, y across the height ``b``, z across the width ``a``).
Free-space kernels take global coordinates. None of these functions
regularize the source point; self terms are handled by the admittance builders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, SingularConfigurationError
from .model import Wavenumbers, WaveguideSpec, guided_wavenumber


@dataclass(frozen=True)
class ModalTruncation:
    max_m: int = 1
    max_n: int = 0

    def __post_init__(self):
        if self.max_m < 1 or self.max_n < 0:
            raise InvalidInputError(f"invalid modal truncation ({self.max_m}, {self.max_n})")


def _check_in_guide(points, guide):
    p = np.atleast_2d(points)
    if not np.all(guide.contains(p)):
        raise InvalidInputError("point lies outside the waveguide volume")


def _standing_wave_ratio(k_x, x, x_src, S):
    """[cos(k_x(x'+x-S)) + cos(k_x(S-|x-x'|))] / sin(k_x S), stable for evanescent k_x."""
    u1 = x_src + x - S
    u2 = S - np.abs(x - x_src)
    if k_x.real == 0 and k_x.imag < 0:
        # k_x = -i*kappa: cos -> cosh, sin(k_x S) -> -i sinh(kappa S); use decaying exponentials
        kappa = -k_x.imag
        denom = 1 - np.exp(-2 * kappa * S)
        num = sum(np.exp(kappa * (np.abs(u) - S)) + np.exp(-kappa * (np.abs(u) + S)) for u in (u1, u2))
        return 1j * num / denom
    s = np.sin(k_x * S)
    if abs(s) < 1e-12:
        raise SingularConfigurationError(
            f"cavity resonance: sin(k_x S) = 0 (k_x S / pi = {(k_x * S / np.pi).real:.6f})")
    return (np.cos(k_x * u1) + np.cos(k_x * u2)) / s


def greens_waveguide_zz(r, r_src, guide: WaveguideSpec, kn: Wavenumbers):
    """TE10 zz-component of the magnetic-source Green's function inside a shorted guide.

    ``r`` may be a single point or an (n, 3) array of observation points.
    """
    r = np.asarray(r, dtype=float)
    r_src = np.asarray(r_src, dtype=float)
    _check_in_guide(r, guide)
    _check_in_guide(r_src, guide)
    a, b, S = guide.a, guide.b, guide.S
    k_x = kn.k_x
    x, z = r[..., 0], r[..., 2]
    xs, zs = r_src[..., 0], r_src[..., 2]
    amp = -k_x * np.sin(np.pi * z / a) * np.sin(np.pi * zs / a) / (a * b * kn.k**2)
    return amp * _standing_wave_ratio(k_x, x, xs, S)


def greens_waveguide_zz_modal(r, r_src, guide: WaveguideSpec, kn: Wavenumbers,
                              trunc: ModalTruncation = ModalTruncation()):
    """Partial modal sum over (m, n) of the zz waveguide Green's function.

    The weight (2 - delta0) takes delta0 = 1 when m == 1 or n == 1;
    trunc=(1, 0) reproduces :func:`greens_waveguide_zz`.
    """
    r = np.asarray(r, dtype=float)
    r_src = np.asarray(r_src, dtype=float)
    _check_in_guide(r, guide)
    _check_in_guide(r_src, guide)
    a, b, S, k = guide.a, guide.b, guide.S, kn.k
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    xs, ys, zs = r_src[..., 0], r_src[..., 1], r_src[..., 2]
    total = 0j
    for m in range(1, trunc.max_m + 1):
        for n in range(0, trunc.max_n + 1):
            k_x = complex(guided_wavenumber(k, np.hypot(m * np.pi / a, n * np.pi / b)))
            if k_x == 0:
                raise SingularConfigurationError(f"mode ({m},{n}) is exactly at cutoff")
            delta0 = 1 if (m == 1 or n == 1) else 0
            shape = (np.sin(m * np.pi * z / a) * np.cos(n * np.pi * y / b)
                     * np.sin(m * np.pi * zs / a) * np.cos(n * np.pi * ys / b))
            weight = (a**2 * k**2 * n**2 + b**2 * k_x**2 * m**2) / (
                a * b * k_x * k**2 * (a**2 * n**2 + b**2 * m**2))
            total = total - (2 - delta0) * shape * weight * _standing_wave_ratio(k_x, x, xs, S)
    return total


def _separation(r, r_src):
    d = np.asarray(r, dtype=float) - np.asarray(r_src, dtype=float)
    R = np.linalg.norm(d, axis=-1)
    if np.any(R == 0):
        raise SingularConfigurationError("free-space Green's function is singular at R = 0")
    return d, R


def greens_freespace_zz(r, r_src, kn: Wavenumbers):
    """Exact free-space zz-component, including the 1/R^2 and 1/R^3 near-field terms."""
    d, R = _separation(r, r_src)
    k = kn.k
    dz2 = d[..., 2] ** 2
    R2 = R**2
    bracket = (R2 - dz2) / R2 - 1j * (R2 - 3 * dz2) / (R**3 * k) - (R2 - 3 * dz2) / (R**4 * k**2)
    return bracket * np.exp(-1j * k * R) / (4 * np.pi * R)


def greens_freespace_zz_farfield(r, r_src, kn: Wavenumbers):
    """Radiating term only: exp(-ikR) sin^2(theta) / (4 pi R)."""
    d, R = _separation(r, r_src)
    sin2 = 1 - (d[..., 2] / R) ** 2
    return np.exp(-1j * kn.k * R) * sin2 / (4 * np.pi * R)


def greens_freespace_dyadic(r, r_src, kn: Wavenumbers):
    """Full 3x3 free-space dyad (I + grad grad / k^2) exp(-ikR)/(4 pi R).

    Broadcasts over leading dimensions of ``r``; returns shape (..., 3, 3).
    """
    d, R = _separation(r, r_src)
    k = kn.k
    u = d / R[..., None]
    kr = np.asarray(k * R)
    g = np.exp(-1j * kr) / (4 * np.pi * R)
    transverse = 1 - 1j / kr - 1 / kr**2
    radial = -1 + 3j / kr + 3 / kr**2
    eye = np.eye(3)
    outer = u[..., :, None] * u[..., None, :]
    return g[..., None, None] * (transverse[..., None, None] * eye + radial[..., None, None] * outer)
