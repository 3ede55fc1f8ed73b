"""Mutual-admittance submatrices of the DMA multiport network and channel models.

Port ordering follows the scenario: N feeds (one per guide), L slots and M users.
The network is

    [v_t]   [Y_tt  Y_st^T  0     ] [j_t]
    [v_s] = [Y_st  Y_ss    Y_rs^T] [j_s]
    [v_r]   [0     Y_rs    Y_rr  ] [j_r]

with Ohm's law v_s = -Y_s j_s and v_r = -Y_r j_r at the terminations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (InvalidInputError, ModelViolationError, NotPSDError,
                     SingularConfigurationError, ToleranceError)
from .greens import (greens_freespace_zz, greens_freespace_zz_farfield,
                     greens_waveguide_zz)
from .model import Medium, Scenario, WaveguideSpec, Wavenumbers, derive_wavenumbers


@dataclass(frozen=True)
class AdmittanceSet:
    Y_tt: np.ndarray
    Y_st: np.ndarray
    Y_ss: np.ndarray
    Y_rr: np.ndarray
    Y_rs: np.ndarray
    Y_s: np.ndarray
    Y_r: np.ndarray

    @property
    def N(self):
        return self.Y_tt.shape[0]

    @property
    def L(self):
        return self.Y_ss.shape[0]

    @property
    def M(self):
        return self.Y_rr.shape[0]

    def replace(self, **kwargs) -> "AdmittanceSet":
        from dataclasses import replace
        return replace(self, **kwargs)

    def full_matrix(self) -> np.ndarray:
        """The (N+L+M)-square admittance matrix with Y_rt = 0."""
        N, L, M = self.N, self.L, self.M
        Y = np.zeros((N + L + M, N + L + M), dtype=complex)
        Y[:N, :N] = self.Y_tt
        Y[:N, N:N + L] = self.Y_st.T
        Y[N:N + L, :N] = self.Y_st
        Y[N:N + L, N:N + L] = self.Y_ss
        Y[N:N + L, N + L:] = self.Y_rs.T
        Y[N + L:, N:N + L] = self.Y_rs
        Y[N + L:, N + L:] = self.Y_rr
        return Y


def _i_omega_eps(medium: Medium):
    return 1j * medium.omega * medium.permittivity


def _guide_kn(scenario: Scenario, n: int) -> Wavenumbers:
    return derive_wavenumbers(scenario.medium, scenario.waveguides[n], warn=False)


def _feed_local(guide: WaveguideSpec):
    return np.array([0.0, guide.b / 2, guide.feed_z])


def build_Yst(scenario: Scenario) -> np.ndarray:
    """Feed-to-slot coupling through the guide; zero across different guides."""
    Y = np.zeros((scenario.L, scenario.N), dtype=complex)
    iwe = _i_omega_eps(scenario.medium)
    for n, guide in enumerate(scenario.waveguides):
        rows = np.flatnonzero(scenario.element_guides == n)
        if rows.size == 0:
            continue
        local = guide.to_local(scenario.element_positions[rows])
        Y[rows, n] = iwe * greens_waveguide_zz(local, _feed_local(guide), guide, _guide_kn(scenario, n))
    return Y


def _waveguide_self_factor(guide: WaveguideSpec, kn: Wavenumbers, omega, mu):
    s = np.sin(kn.k_x * guide.S)
    if abs(s) < 1e-12:
        raise SingularConfigurationError(
            f"cavity resonance: sin(k_x S) = 0 (k_x S / pi = {(kn.k_x * guide.S / np.pi).real:.6f})")
    return kn.k_x / (guide.a * guide.b * omega * mu * s)


def build_Ytt(scenario: Scenario) -> np.ndarray:
    """Diagonal feed self-admittances (RF chains assumed isolated)."""
    med = scenario.medium
    diag = np.empty(scenario.N, dtype=complex)
    for n, guide in enumerate(scenario.waveguides):
        kn = _guide_kn(scenario, n)
        factor = _waveguide_self_factor(guide, kn, med.omega, med.permeability)
        diag[n] = -2j * factor * np.sin(np.pi * guide.feed_z / guide.a) ** 2 * np.cos(kn.k_x * guide.S)
    return np.diag(diag)


def self_conductance_on_plane(medium: Medium) -> float:
    """Real self-admittance k*omega*eps/(3*pi) of a slot on an infinite PEC plane."""
    return medium.k * medium.omega * medium.permittivity / (3 * np.pi)


def self_conductance_free(medium: Medium) -> float:
    """Real self-admittance k*omega*eps/(6*pi) of a dipole in free space."""
    return medium.k * medium.omega * medium.permittivity / (6 * np.pi)


def build_Yss(scenario: Scenario) -> np.ndarray:
    """Slot-to-slot coupling: doubled free-space term plus the guide term on a shared guide.

    Diagonal entries keep only the finite real part of the air self term,
    k*omega*eps/(3*pi); the divergent reactance is assumed absorbed by the
    termination. The guide self term is the x -> x' limit of the TE10 kernel.
    """
    med = scenario.medium
    L = scenario.L
    iwe = _i_omega_eps(med)
    kn0 = _guide_kn(scenario, 0)
    P = scenario.element_positions
    Y = np.zeros((L, L), dtype=complex)
    iu, ju = np.triu_indices(L, k=1)
    if iu.size:
        Y[iu, ju] = iwe * 2 * greens_freespace_zz(P[iu], P[ju], kn0)
    for n, guide in enumerate(scenario.waveguides):
        rows = np.flatnonzero(scenario.element_guides == n)
        if rows.size == 0:
            continue
        kn = _guide_kn(scenario, n)
        local = guide.to_local(P[rows])
        for a_idx, l in enumerate(rows):
            for q in rows[a_idx + 1:]:
                Y[l, q] += iwe * greens_waveguide_zz(local[a_idx], guide.to_local(P[q]), guide, kn)
            # guide self term: -i k_x [cos(k_x(S-2x')) + cos(k_x S)] sin^2(pi z'/a) / (a b omega mu sin(k_x S))
            x, z = local[a_idx, 0], local[a_idx, 2]
            factor = _waveguide_self_factor(guide, kn, med.omega, med.permeability)
            Y[l, l] = self_conductance_on_plane(med) - 1j * factor * (
                np.cos(kn.k_x * (guide.S - 2 * x)) + np.cos(kn.k_x * guide.S)
            ) * np.sin(np.pi * z / guide.a) ** 2
    return Y + np.triu(Y, 1).T


def build_Yrr(scenario: Scenario) -> np.ndarray:
    """User-to-user free-space coupling; diagonal is the real part k*omega*eps/(6*pi)."""
    med = scenario.medium
    M = scenario.M
    Y = np.zeros((M, M), dtype=complex)
    U = scenario.user_positions
    iu, ju = np.triu_indices(M, k=1)
    if iu.size:
        d = np.linalg.norm(U[iu] - U[ju], axis=-1)
        if np.any(d <= 1e-12 * med.wavelength):
            raise InvalidInputError("two users share the same position")
        Y[iu, ju] = _i_omega_eps(med) * greens_freespace_zz(U[iu], U[ju], _guide_kn(scenario, 0))
    Y = Y + Y.T
    Y[np.diag_indices(M)] = self_conductance_free(med)
    return Y


def build_Yrs_los(scenario: Scenario, farfield=False) -> np.ndarray:
    """Line-of-sight user-to-slot admittances, -2 i omega eps G (image doubling, outward normal)."""
    M, L = scenario.M, scenario.L
    if M == 0 or L == 0:
        return np.zeros((M, L), dtype=complex)
    U = scenario.user_positions[:, None, :]
    P = scenario.element_positions[None, :, :]
    kernel = greens_freespace_zz_farfield if farfield else greens_freespace_zz
    return -_i_omega_eps(scenario.medium) * 2 * kernel(U, P, _guide_kn(scenario, 0))


def build_admittances(scenario: Scenario, Y_rs=None, farfield=False) -> AdmittanceSet:
    """Assemble every submatrix; ``Y_rs`` overrides the LoS channel when given."""
    if Y_rs is None:
        Y_rs = build_Yrs_los(scenario, farfield=farfield)
    Y_rs = np.asarray(Y_rs, dtype=complex)
    if Y_rs.shape != (scenario.M, scenario.L):
        raise InvalidInputError(f"Y_rs has shape {Y_rs.shape}, expected {(scenario.M, scenario.L)}")
    return AdmittanceSet(
        Y_tt=build_Ytt(scenario),
        Y_st=build_Yst(scenario),
        Y_ss=build_Yss(scenario),
        Y_rr=build_Yrr(scenario),
        Y_rs=Y_rs,
        Y_s=np.diag(scenario.Y_s),
        Y_r=np.diag(scenario.Y_r),
    )


def connector_admittance_auto(medium_or_scenario, guide: WaveguideSpec | None = None) -> float:
    """Connector admittance matched to the feed of a semi-infinite guide.

    As S -> infinity with vanishing loss, cot(k_x S) -> -i and the feed
    self-admittance tends to 2 k_x sin^2(pi z'/a) / (a b omega mu).
    """
    if isinstance(medium_or_scenario, Scenario):
        medium, guide = medium_or_scenario.medium, medium_or_scenario.waveguides[0]
    else:
        medium = medium_or_scenario
    kn = derive_wavenumbers(medium, guide, warn=False)
    if kn.k_x.imag != 0 or kn.k_x.real <= 0:
        raise ModelViolationError("TE10 mode is evanescent; no semi-infinite match exists")
    return float(2 * kn.k_x.real * np.sin(np.pi * guide.feed_z / guide.a) ** 2
                 / (guide.a * guide.b * medium.omega * medium.permeability))


# --------------------------------------------------------------------------
# stochastic channel

@dataclass(frozen=True)
class CovarianceStack:
    sigmas: np.ndarray          # (M, L, L)
    sigma_alpha2: np.ndarray    # (M,)
    polarization_loss: float


def path_gain_variance(medium: Medium, user_distance, polarization_loss=1.0):
    """sigma_alpha^2 = (2 omega eps / (4 pi R))^2 L_p."""
    R = np.asarray(user_distance, dtype=float)
    if np.any(R <= 0):
        raise InvalidInputError("user distance must be positive")
    return (2 * medium.omega * medium.permittivity / (4 * np.pi * R)) ** 2 * polarization_loss


def _j1_over_x(x):
    # (sin x / x^3 - cos x / x^2), series below x = 0.1 to avoid cancellation
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 0.1
    xs = x[small]
    out[small] = 1 / 3 - xs**2 / 30 + xs**4 / 840 - xs**6 / 45360
    xl = x[~small]
    out[~small] = np.sin(xl) / xl**3 - np.cos(xl) / xl**2
    return out


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def surface_correlation(separations, k):
    """Bracketed closed-form factor of the surface covariance (2/3 at zero separation).

    ``separations`` has shape (..., 3) with zero y-component. Equivalent to
    (1 + 3dz^2/(R^4k^2) - (1+dz^2k^2)/(R^2k^2)) sin(kR)/(kR) + (1/(kR) - 3dz^2/(kR^3)) cos(kR)/(kR),
    regrouped as (1-c^2) j0(kR) + (3c^2-1) j1(kR)/(kR) with c = dz/R.
    """
    d = np.asarray(separations, dtype=float)
    R = np.linalg.norm(d, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        c2 = np.where(R > 0, (d[..., 2] / np.where(R > 0, R, 1)) ** 2, 1 / 3)
    x = k * R
    return (1 - c2) * _sinc(x) + (3 * c2 - 1) * _j1_over_x(x)


def rayleigh_covariance(scenario: Scenario, user_distance=None, polarization_loss=None) -> CovarianceStack:
    """Closed-form spatial covariance of the isotropic-scattering channel for slots on the surface.

    ``user_distance`` is a scalar or one distance per user; by default the
    distance from each user to the array centroid.
    """
    P = scenario.element_positions
    if P.size and np.ptp(P[:, 1]) > 1e-9 * scenario.medium.wavelength:
        raise ModelViolationError("closed-form covariance needs all elements on one y = const plane")
    if user_distance is None:
        if scenario.M == 0:
            raise InvalidInputError("no users in scenario; pass user_distance explicitly")
        user_distance = np.linalg.norm(scenario.user_positions - P.mean(axis=0), axis=1)
    R = np.atleast_1d(np.asarray(user_distance, dtype=float))
    L_p = scenario.polarization_loss if polarization_loss is None else polarization_loss
    s2 = path_gain_variance(scenario.medium, R, L_p)
    corr = surface_correlation(P[:, None, :] - P[None, :, :], scenario.medium.k)
    sigmas = (4 * np.pi / 3) * s2[:, None, None] * corr[None]
    return CovarianceStack(sigmas=sigmas, sigma_alpha2=s2, polarization_loss=L_p)


def _psd_sqrt(sigma, tol=1e-9):
    sigma = (sigma + sigma.conj().T) / 2
    w, V = np.linalg.eigh(sigma)
    top = max(w.max(initial=0.0), 0.0)
    if w.size and w.min() < -tol * top:
        raise NotPSDError(f"covariance eigenvalue {w.min():.3e} below -{tol:g} * {top:.3e}")
    w = np.clip(w, 0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def sample_rayleigh(cov: CovarianceStack, seed=None, size=None) -> np.ndarray:
    """Draw Y_rs with rows y_m ~ CN(0, Sigma_m).

    Returns (M, L), or (size, M, L) when ``size`` is given.
    """
    rng = np.random.default_rng(seed)
    M, L, _ = cov.sigmas.shape
    roots = np.stack([_psd_sqrt(s) for s in cov.sigmas]) if M else np.zeros((0, L, L))
    count = 1 if size is None else int(size)
    w = (rng.standard_normal((count, M, L)) + 1j * rng.standard_normal((count, M, L))) / np.sqrt(2)
    out = np.einsum("mij,smj->smi", roots, w)
    return out[0] if size is None else out


@dataclass(frozen=True)
class RayPaths:
    theta: np.ndarray      # (M, Np) departure polar angle
    phi: np.ndarray        # (M, Np) departure azimuth, front half-space
    vartheta: np.ndarray   # (M, Np) arrival polar angle
    alpha: np.ndarray      # (M, Np) complex path gains


def steering_vectors(positions, theta, phi, k):
    """exp(i k(theta, phi) . r_l) with shape theta.shape + (L,)."""
    theta = np.asarray(theta)
    phi = np.asarray(phi)
    kvec = k * np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
    return np.exp(1j * kvec @ np.asarray(positions, dtype=float).T)


def draw_ray_paths(scenario: Scenario, n_paths, seed=None, user_distance=None, path_variance=None) -> RayPaths:
    """Draw angles with densities sin(theta)/(2 pi) on [0, pi]^2 and sin(vartheta)/2.

    Path gains default to variance 2*pi*sigma_alpha^2, which makes the
    large-N_p covariance equal :func:`rayleigh_covariance`.
    """
    if int(n_paths) < 1:
        raise InvalidInputError("need at least one path")
    rng = np.random.default_rng(seed)
    if user_distance is None:
        if scenario.M == 0:
            raise InvalidInputError("no users in scenario; pass user_distance explicitly")
        user_distance = np.linalg.norm(scenario.user_positions - scenario.element_positions.mean(axis=0), axis=1)
    R = np.atleast_1d(np.asarray(user_distance, dtype=float))
    if path_variance is None:
        path_variance = 2 * np.pi * path_gain_variance(scenario.medium, R, scenario.polarization_loss)
    var = np.broadcast_to(np.asarray(path_variance, dtype=float), R.shape)
    shape = (len(R), int(n_paths))
    theta = np.arccos(1 - 2 * rng.random(shape))
    phi = np.pi * rng.random(shape)
    vartheta = np.arccos(1 - 2 * rng.random(shape))
    alpha = np.sqrt(var[:, None] / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return RayPaths(theta, phi, vartheta, alpha)


def ray_sum_channel(scenario: Scenario, n_paths, seed=None, user_distance=None, path_variance=None) -> np.ndarray:
    """One finite-ray realization of Y_rs, shape (M, L)."""
    paths = draw_ray_paths(scenario, n_paths, seed, user_distance, path_variance)
    a = steering_vectors(scenario.element_positions, paths.theta, paths.phi, scenario.medium.k)
    weights = paths.alpha * np.sin(paths.theta) * np.sin(paths.vartheta) / np.sqrt(paths.theta.shape[1])
    return np.einsum("mn,mnl->ml", weights, a)


def ray_sum_covariance(scenario: Scenario, n_paths, seed=None, user_distance=None, path_variance=None) -> np.ndarray:
    """Monte-Carlo covariance of the ray-sum channel over the drawn path geometry.

    Averages the path-gain expectation E|alpha|^2 sin^2(theta) sin^2(vartheta) a a^H
    over ``n_paths`` sampled directions; shape (M, L, L).
    """
    paths = draw_ray_paths(scenario, n_paths, seed, user_distance, path_variance)
    R = paths.alpha.shape[0]
    if path_variance is None:
        dist = user_distance
        if dist is None:
            dist = np.linalg.norm(scenario.user_positions - scenario.element_positions.mean(axis=0), axis=1)
        path_variance = 2 * np.pi * path_gain_variance(scenario.medium, dist, scenario.polarization_loss)
    var = np.broadcast_to(np.asarray(path_variance, dtype=float), (R,))
    a = steering_vectors(scenario.element_positions, paths.theta, paths.phi, scenario.medium.k)
    w = (np.sin(paths.theta) * np.sin(paths.vartheta)) ** 2
    return var[:, None, None] * np.einsum("mn,mni,mnj->mij", w, a, a.conj()) / paths.theta.shape[1]


# --------------------------------------------------------------------------
# gain-pattern oracle

def dipole_on_plane_gain(theta, phi):
    """3 sin^2(theta) on the front half-space 0 <= phi <= pi, zero behind the plane."""
    theta = np.asarray(theta)
    phi = np.asarray(phi)
    front = (phi >= 0) & (phi <= np.pi)
    return np.where(front, 3 * np.sin(theta) ** 2, 0.0)


def _hemisphere_rule(order):
    x, w = leggauss(order)
    nodes = (x + 1) * np.pi / 2
    return nodes, w * np.pi / 2


def quadrature_admittance_oracle(pattern_gain, r_n, r_m, kn: Wavenumbers, tol=1e-10, max_order=1024):
    """Normalized mutual conductance Re{Y_nm / Y_nn} from a far-field gain pattern.

    Integrates G(theta, phi)/(4 pi) exp(-i k rhat.(r_n - r_m)) sin(theta) over the
    front half-space with a Gauss-Legendre product rule, doubling the order until
    successive estimates agree to ``tol``.
    """
    d = np.asarray(r_n, dtype=float) - np.asarray(r_m, dtype=float)

    def integrate(order, shift):
        t, wt = _hemisphere_rule(order)
        p, wp = _hemisphere_rule(order)
        T, Pp = np.meshgrid(t, p, indexing="ij")
        rhat = np.stack([np.sin(T) * np.cos(Pp), np.sin(T) * np.sin(Pp), np.cos(T)], axis=-1)
        g = np.asarray(pattern_gain(T, Pp), dtype=float)
        f = g / (4 * np.pi) * np.sin(T) * np.exp(-1j * kn.k * (rhat @ shift))
        return wt @ f @ wp

    efficiency = integrate(64, np.zeros(3)).real
    if efficiency > 1 + 1e-6:
        raise InvalidInputError(f"pattern radiates {efficiency:.6f} > 1 of accepted power")
    order = 32
    previous = integrate(order, d)
    while order < max_order:
        order *= 2
        current = integrate(order, d)
        if abs(current - previous) <= tol * max(1.0, abs(current)):
            return float(current.real)
        previous = current
    raise ToleranceError(f"pattern quadrature did not converge to {tol:g} at order {order}",
                         estimate=float(previous.real))
