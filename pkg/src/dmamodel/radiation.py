"""In-guide field probes, radiated far field, gain patterns and radiated power.

Directions use the polar angle theta from +z and the azimuth phi from +x, so
the front half-space y > 0 is 0 < phi < pi. The PEC plane blocks the back
half-space, so nothing is radiated there.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import GeometryWarning, InvalidInputError, ToleranceError
from .greens import greens_freespace_dyadic, greens_waveguide_zz
from .model import Scenario, derive_wavenumbers
from .network import NetworkSolution

FREE_SPACE_ETA = 120 * np.pi
DEFAULT_DISTANCE_WAVELENGTHS = 1e4


@dataclass(frozen=True)
class FieldProbe:
    positions: np.ndarray
    values: np.ndarray   # H_z (n,) inside a guide, or H (n, 3) in free space


@dataclass(frozen=True)
class GainGrid:
    theta: np.ndarray
    phi: np.ndarray
    gain: np.ndarray     # (len(theta), len(phi))
    R: float
    P_ref: float
    eta: float

    @property
    def gain_dbi(self):
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.gain)


def field_in_guide(solution: NetworkSolution, scenario: Scenario, guide_index: int, positions) -> FieldProbe:
    """H_z inside one guide from its own feed and slots (TE10 only)."""
    if not 0 <= guide_index < scenario.N:
        raise InvalidInputError(f"no waveguide {guide_index}")
    guide = scenario.waveguides[guide_index]
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    local = guide.to_local(positions)
    if not np.all(guide.contains(local)):
        raise InvalidInputError("probe position outside the waveguide")
    kn = derive_wavenumbers(scenario.medium, guide, warn=False)
    feed = np.array([0.0, guide.b / 2, guide.feed_z])
    total = greens_waveguide_zz(local, feed, guide, kn) * solution.j_t[guide_index]
    for l in np.flatnonzero(scenario.element_guides == guide_index):
        src = guide.to_local(scenario.element_positions[l])
        total = total + greens_waveguide_zz(local, src, guide, kn) * solution.j_s[l]
    med = scenario.medium
    return FieldProbe(positions=positions, values=-1j * med.omega * med.permittivity * total)


def guide_centerline(scenario: Scenario, guide_index=0, samples=200):
    """Points along x at (y, z) = (b/2, a/2) of a guide, endpoints included."""
    guide = scenario.waveguides[guide_index]
    x = np.linspace(0.0, guide.S, samples)
    local = np.column_stack([x, np.full_like(x, guide.b / 2), np.full_like(x, guide.a / 2)])
    return guide.to_global(local)


def directions(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack(np.broadcast_arrays(np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi),
                                        np.cos(theta)), axis=-1)


def _default_distance(scenario, R):
    if R is None:
        return DEFAULT_DISTANCE_WAVELENGTHS * scenario.medium.wavelength
    if not R > 0:
        raise InvalidInputError("evaluation distance must be positive")
    P = scenario.element_positions
    if len(P):
        aperture = np.linalg.norm(np.ptp(P, axis=0)) if len(P) > 1 else scenario.medium.wavelength
        if R < 10 * max(aperture, scenario.medium.wavelength):
            warnings.warn(f"R = {R:.3g} m is not far from the {aperture:.3g} m aperture",
                          GeometryWarning, stacklevel=3)
    return float(R)


def farfield_H(solution: NetworkSolution, scenario: Scenario, theta, phi, R=None):
    """Radiated H at distance R in direction (theta, phi); shape broadcast(theta, phi) + (3,).

    Each slot is a z-directed magnetic dipole doubled by its image in the PEC plane.
    Directions behind the plane (y < 0) return zero.
    """
    R = _default_distance(scenario, R)
    med = scenario.medium
    kn = derive_wavenumbers(med, scenario.waveguides[0], warn=False)
    r = R * directions(theta, phi)
    h = np.zeros(r.shape, dtype=complex)
    for l, pos in enumerate(scenario.element_positions):
        if solution.j_s[l] == 0:
            continue
        h += 2 * greens_freespace_dyadic(r, pos, kn)[..., :, 2] * solution.j_s[l]
    # the PEC plane blocks the back half-space
    h[r[..., 1] < 0] = 0
    return -1j * med.omega * med.permittivity * h


def _reference_power(solution, scenario, reference, P_ref):
    if P_ref is not None:
        value = P_ref
    elif reference == "supplied":
        value = solution.P_s
    elif reference == "transmitted":
        value = solution.P_t
    elif reference == "radiated":
        value = radiated_power(solution, scenario)
    else:
        raise InvalidInputError(f"unknown gain reference {reference!r}")
    if value is None or not value > 0:
        raise InvalidInputError(f"gain reference power must be positive, got {value!r}")
    return float(value)


def gain(solution: NetworkSolution, scenario: Scenario, theta, phi, R=None, reference="supplied",
         P_ref=None, eta=FREE_SPACE_ETA):
    """Gain 4 pi R^2 eta |h|^2 / (2 P_ref).

    With the default ``reference="supplied"`` this is realized gain, which folds in
    insertion and termination losses. "transmitted" and "radiated" switch the reference.
    """
    R = _default_distance(scenario, R)
    P = _reference_power(solution, scenario, reference, P_ref)
    h = farfield_H(solution, scenario, theta, phi, R)
    return 4 * np.pi * R**2 * eta * np.sum(np.abs(h) ** 2, axis=-1) / (2 * P)


def gain_grid(solution, scenario, n_theta=91, n_phi=91, R=None, reference="supplied", P_ref=None,
              eta=FREE_SPACE_ETA) -> GainGrid:
    """Gain sampled on a regular grid covering the front half-space, theta, phi in [0, pi]."""
    R = _default_distance(scenario, R)
    P = _reference_power(solution, scenario, reference, P_ref)
    theta = np.linspace(0, np.pi, n_theta)
    phi = np.linspace(0, np.pi, n_phi)
    T, Ph = np.meshgrid(theta, phi, indexing="ij")
    g = gain(solution, scenario, T, Ph, R, P_ref=P, eta=eta)
    return GainGrid(theta=theta, phi=phi, gain=g, R=R, P_ref=P, eta=eta)


def gain_cut(solution, scenario, cut, angle, samples=181, R=None, reference="supplied", P_ref=None,
             eta=FREE_SPACE_ETA):
    """One-dimensional gain trace.

    ``cut="theta"`` fixes theta = ``angle`` and sweeps phi over [0, pi];
    ``cut="phi"`` fixes phi and sweeps theta over [0, pi]. Returns (angles, gains).
    """
    if not 0 <= angle <= np.pi:
        raise InvalidInputError(f"cut angle {angle} is outside the front half-space [0, pi]")
    sweep = np.linspace(0, np.pi, samples)
    if cut == "theta":
        values = gain(solution, scenario, angle, sweep, R, reference, P_ref, eta)
    elif cut == "phi":
        values = gain(solution, scenario, sweep, angle, R, reference, P_ref, eta)
    else:
        raise InvalidInputError(f"cut must be 'theta' or 'phi', got {cut!r}")
    return sweep, values


def hemisphere_rule(order):
    """Gauss-Legendre in theta times endpoint trapezoid in phi over the front half-space.

    Returns (theta, phi, weights) on an (order, order) grid; weights include sin(theta).
    For sources in a y = const plane the integrand is even about phi = 0 and phi = pi,
    so the trapezoid rule converges spectrally.
    """
    if order < 2:
        raise InvalidInputError("quadrature order must be at least 2")
    x, w = leggauss(order)
    theta = (x + 1) * np.pi / 2
    wt = w * np.pi / 2 * np.sin(theta)
    phi = np.linspace(0, np.pi, order)
    wp = np.full(order, np.pi / (order - 1))
    wp[[0, -1]] /= 2
    T, Ph = np.meshgrid(theta, phi, indexing="ij")
    return T, Ph, wt[:, None] * wp[None, :]


def _radiated_power_at(solution, scenario, order, R):
    T, Ph, W = hemisphere_rule(order)
    h = farfield_H(solution, scenario, T, Ph, R)
    eta = scenario.medium.impedance
    return float(np.sum(W * eta * np.sum(np.abs(h) ** 2, axis=-1) / 2) * R**2)


def radiated_power(solution: NetworkSolution, scenario: Scenario, quadrature_order=64, R=None,
                   rtol=5e-3) -> float:
    """Power leaving through the front half-space, by integrating the far-field Poynting flux.

    The estimate at ``quadrature_order`` is cross-checked against twice that order;
    disagreement beyond ``rtol`` raises :class:`ToleranceError`.
    """
    R = _default_distance(scenario, R)
    if not np.any(solution.j_s):
        return 0.0
    P = _radiated_power_at(solution, scenario, quadrature_order, R)
    check = _radiated_power_at(solution, scenario, 2 * quadrature_order, R)
    if abs(P - check) > rtol * abs(check):
        raise ToleranceError(
            f"radiated power not converged at order {quadrature_order}: {P:.6g} vs {check:.6g} W",
            estimate=check)
    return P
