"""Multiport network solution: currents, reflections, powers and the equivalent channel."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .admittance import AdmittanceSet
from .errors import (ConditioningWarning, InvalidInputError, ReflectionWarning,
                     SingularConfigurationError)

COND_WARN = 1e12


def _solve(A, B, block, notes):
    """Solve A X = B by LU factorization, recording the condition estimate."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return np.zeros((0,) + np.shape(B)[1:], dtype=complex)
    try:
        lu = sla.lu_factor(A, check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise SingularConfigurationError(f"{block}: {exc}") from None
    rcond = _rcond(A, lu)
    if rcond == 0 or not np.isfinite(rcond):
        raise SingularConfigurationError(f"{block} is singular (condition estimate inf)")
    cond = 1 / rcond
    if cond > COND_WARN:
        msg = f"{block} is ill-conditioned (condition estimate {cond:.3e})"
        notes.append(msg)
        warnings.warn(msg, ConditioningWarning, stacklevel=3)
    return sla.lu_solve(lu, np.asarray(B, dtype=complex))


def _rcond(A, lu):
    anorm = np.linalg.norm(A, 1)
    if anorm == 0:
        return 0.0
    diag = np.abs(np.diag(lu[0]))
    if np.any(diag == 0):
        return 0.0
    # cheap 1-norm reciprocal condition estimate from LAPACK
    gecon = sla.get_lapack_funcs("gecon", (lu[0],))
    rcond, info = gecon(lu[0], anorm, norm="1")
    return float(rcond)


@dataclass(frozen=True)
class NetworkSolution:
    j_t: np.ndarray
    v_t: np.ndarray
    j_s: np.ndarray
    v_s: np.ndarray
    j_r: np.ndarray
    v_r: np.ndarray
    Y_p: np.ndarray
    P_t: float
    P_r: np.ndarray
    P_d: np.ndarray
    bilateral: bool = False
    Y_0: float | None = None
    Y_in: np.ndarray | None = None
    gamma: np.ndarray | None = None
    T: np.ndarray | None = None
    j: np.ndarray | None = None
    P_s: float | None = None
    notes: tuple = field(default_factory=tuple)


def rf_chain_admittance(adm: AdmittanceSet, _notes=None) -> np.ndarray:
    """Y_p = Y_tt - Y_st^T (Y_s + Y_ss)^-1 Y_st, so that v_t = Y_p j_t."""
    notes = [] if _notes is None else _notes
    return adm.Y_tt - adm.Y_st.T @ _solve(adm.Y_s + adm.Y_ss, adm.Y_st, "Y_s + Y_ss", notes)


def input_admittance(Y_p, j_t) -> np.ndarray:
    j_t = np.asarray(j_t, dtype=complex)
    zero = np.flatnonzero(j_t == 0)
    if zero.size:
        raise InvalidInputError(f"input admittance undefined at port {int(zero[0])}: (j_t)_n = 0")
    return (Y_p @ j_t) / j_t


def reflection_transmission(Y_p, j_t, Y_0):
    """Active input admittances, reflection and transmission coefficients at the feeds.

    Returns (Y_in, Gamma, T) with Gamma and T as diagonal matrices. Gamma depends on
    the whole excitation vector through Y_p, not on the DMA alone.
    """
    Y_in = input_admittance(Y_p, j_t)
    denom = Y_in + Y_0
    if np.any(np.abs(denom) == 0):
        raise SingularConfigurationError("Y_in = -Y_0: reflection coefficient is infinite")
    gamma = -(Y_in - Y_0) / denom
    return Y_in, np.diag(gamma), np.eye(len(gamma)) + np.diag(gamma)


def transmit_from_feed(Y_p, j, Y_0):
    """Currents entering the guides for given RF-chain currents ``j``.

    j_t = T(j_t) j is solved exactly: with T_nn = 2 Y_0 / (Y_0 + Y_in,n) it is the
    linear system (Y_0 I + Y_p) j_t = 2 Y_0 j.
    """
    j = np.asarray(j, dtype=complex)
    return _solve(Y_0 * np.eye(len(j)) + Y_p, 2 * Y_0 * j, "Y_0 I + Y_p", [])


def supplied_power(Y_p, j_t, gamma) -> float:
    """P_s = Re{j_t^H (I - Gamma^H Gamma)^-1 Y_p j_t} / 2 with diagonal Gamma."""
    g = np.diag(gamma)
    if np.any(np.abs(g) >= 1):
        warnings.warn(f"|Gamma| >= 1 at ports {np.flatnonzero(np.abs(g) >= 1).tolist()}",
                      ReflectionWarning, stacklevel=2)
    j_t = np.asarray(j_t, dtype=complex)
    return float(np.real(np.conj(j_t) @ ((Y_p @ j_t) / (1 - np.abs(g) ** 2))) / 2)


def _finish(adm, j_t, j_s, j_r, Y_p, v_t, bilateral, Y_0, notes):
    j_t = np.asarray(j_t, dtype=complex)
    v_s = -np.diag(adm.Y_s) * j_s
    v_r = -np.diag(adm.Y_r) * j_r
    P_t = float(np.real(np.vdot(j_t, v_t)) / 2)
    P_r = np.abs(j_r) ** 2 * np.real(np.diag(adm.Y_r)) / 2
    P_d = np.abs(j_s) ** 2 * np.real(np.diag(adm.Y_s)) / 2
    extra = {}
    if Y_0 is not None and len(j_t) and np.all(j_t != 0):
        Y_in, gamma, T = reflection_transmission(Y_p, j_t, Y_0)
        g = np.diag(gamma)
        if np.any(np.abs(g) >= 1):
            msg = f"|Gamma| >= 1 at ports {np.flatnonzero(np.abs(g) >= 1).tolist()}"
            notes.append(msg)
            warnings.warn(msg, ReflectionWarning, stacklevel=3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ReflectionWarning)
            P_s = supplied_power(Y_p, j_t, gamma)
        extra = dict(Y_in=Y_in, gamma=gamma, T=T, j=j_t / np.diag(T), P_s=P_s)
    elif len(j_t) and np.all(j_t == 0):
        extra = dict(j=np.zeros_like(j_t), P_s=0.0)
    return NetworkSolution(j_t=j_t, v_t=v_t, j_s=j_s, v_s=v_s, j_r=j_r, v_r=v_r, Y_p=Y_p,
                           P_t=P_t, P_r=P_r, P_d=P_d, bilateral=bilateral, Y_0=Y_0,
                           notes=tuple(notes), **extra)


def _check_jt(adm, j_t):
    j_t = np.asarray(j_t, dtype=complex).reshape(-1)
    if j_t.shape != (adm.N,):
        raise InvalidInputError(f"j_t has {j_t.size} entries, expected N={adm.N}")
    return j_t


def solve_unilateral(adm: AdmittanceSet, j_t, Y_0=None) -> NetworkSolution:
    """Network solution neglecting back-coupling from the users to the array."""
    j_t = _check_jt(adm, j_t)
    notes = []
    Z = _solve(adm.Y_s + adm.Y_ss, np.column_stack([adm.Y_st, adm.Y_rs.T]), "Y_s + Y_ss", notes)
    inv_st = Z[:, :adm.N]
    j_s = -inv_st @ j_t
    j_r = _solve(adm.Y_r + adm.Y_rr, adm.Y_rs @ inv_st @ j_t, "Y_r + Y_rr", notes)
    Y_p = adm.Y_tt - adm.Y_st.T @ inv_st
    return _finish(adm, j_t, j_s, j_r, Y_p, Y_p @ j_t, False, Y_0, notes)


def solve_bilateral(adm: AdmittanceSet, j_t, Y_0=None) -> NetworkSolution:
    """Full network solution including user-to-array back-coupling."""
    j_t = _check_jt(adm, j_t)
    notes = []
    Z = _solve(adm.Y_s + adm.Y_ss, np.column_stack([adm.Y_st, adm.Y_rs.T]), "Y_s + Y_ss", notes)
    inv_st, inv_rs = Z[:, :adm.N], Z[:, adm.N:]
    outer = adm.Y_r + adm.Y_rr - adm.Y_rs @ inv_rs
    j_r = _solve(outer, adm.Y_rs @ inv_st @ j_t, "Y_r + Y_rr - Y_rs (Y_s+Y_ss)^-1 Y_rs^T", notes)
    j_s = -(inv_st @ j_t + inv_rs @ j_r)
    Y_p = adm.Y_tt - adm.Y_st.T @ inv_st
    v_t = adm.Y_tt @ j_t + adm.Y_st.T @ j_s
    return _finish(adm, j_t, j_s, j_r, Y_p, v_t, True, Y_0, notes)


def powers(solution: NetworkSolution, adm: AdmittanceSet):
    """(P_t, P_s, P_r, P_d) recomputed from the port currents of ``solution``."""
    j_t = solution.j_t
    P_t = float(np.real(np.vdot(j_t, solution.v_t)) / 2)
    P_s = None
    if solution.gamma is not None:
        P_s = supplied_power(solution.Y_p, j_t, solution.gamma)
    P_r = np.abs(solution.j_r) ** 2 * np.real(np.diag(adm.Y_r)) / 2
    P_d = np.abs(solution.j_s) ** 2 * np.real(np.diag(adm.Y_s)) / 2
    return P_t, P_s, P_r, P_d


# --------------------------------------------------------------------------
# excitation


@dataclass(frozen=True)
class Excitation:
    """How the feeds are driven.

    ``mode`` is "transmit_currents" (j_t given), "feed_currents" (RF-chain
    currents j given) or "supplied_power" (total P_s with relative weights).
    """

    mode: str
    values: np.ndarray
    power: float | None = None

    def __post_init__(self):
        if self.mode not in ("transmit_currents", "feed_currents", "supplied_power"):
            raise InvalidInputError(f"unknown excitation mode {self.mode!r}")
        values = np.asarray(self.values, dtype=complex).reshape(-1)
        object.__setattr__(self, "values", values)
        if self.mode == "supplied_power":
            if not np.any(values != 0):
                raise InvalidInputError("excitation weights must not all be zero")
            if self.power is None or not self.power > 0:
                raise InvalidInputError("supplied power target must be positive")

    @classmethod
    def equal_power(cls, n_feeds, power=1.0, phases=None):
        phases = np.zeros(n_feeds) if phases is None else np.asarray(phases, dtype=float)
        return cls("supplied_power", np.exp(1j * phases), power)


def resolve_excitation(adm: AdmittanceSet, excitation: Excitation, Y_0=None) -> np.ndarray:
    """Turn any excitation into the transmit currents j_t."""
    if excitation.values.shape != (adm.N,):
        raise InvalidInputError(f"excitation has {excitation.values.size} values, expected N={adm.N}")
    if excitation.mode == "transmit_currents":
        return excitation.values
    if Y_0 is None:
        raise InvalidInputError(f"{excitation.mode} excitation needs a connector admittance Y_0")
    Y_p = rf_chain_admittance(adm)
    if excitation.mode == "feed_currents":
        return transmit_from_feed(Y_p, excitation.values, Y_0)
    w = excitation.values / np.linalg.norm(excitation.values)
    j_t = transmit_from_feed(Y_p, w, Y_0)
    _, gamma, _ = reflection_transmission(Y_p, j_t, Y_0)
    P_unit = supplied_power(Y_p, j_t, gamma)
    if not P_unit > 0:
        raise SingularConfigurationError(f"unit excitation supplies non-positive power {P_unit:.3e}")
    return np.sqrt(excitation.power / P_unit) * j_t


def solve(adm: AdmittanceSet, excitation: Excitation, Y_0=None, bilateral=False) -> NetworkSolution:
    j_t = resolve_excitation(adm, excitation, Y_0)
    return (solve_bilateral if bilateral else solve_unilateral)(adm, j_t, Y_0)


# --------------------------------------------------------------------------
# passive phase control


@dataclass(frozen=True)
class LorentzianResponse:
    c: float
    phase: float
    amplitude: float

    @property
    def value(self) -> complex:
        return self.amplitude * np.exp(1j * self.phase)


def lorentzian_sweep(re_yss: float, c_values):
    """Response 1/(Re{Y_ss} + i c) of a lossless termination Y_s = i(c - Im{Y_ss})."""
    if not re_yss > 0:
        raise InvalidInputError(f"Re{{Y_ss}} = {re_yss} <= 0 violates passivity")
    c = np.asarray(c_values, dtype=float).reshape(-1)
    phase = -np.arctan(c / re_yss)
    amplitude = 1 / np.sqrt(c**2 + re_yss**2)
    return [LorentzianResponse(float(ci), float(p), float(a)) for ci, p, a in zip(c, phase, amplitude)]


# --------------------------------------------------------------------------
# MIMO model


@dataclass(frozen=True)
class EquivalentChannel:
    H_eq: np.ndarray
    B: np.ndarray | None = None
    noise_variance: float = 0.0


def equivalent_channel(adm: AdmittanceSet, B=None, noise_variance=0.0) -> EquivalentChannel:
    """H_eq = (Y_r + Y_rr)^-1 Y_rs (Y_s + Y_ss)^-1 Y_st (unilateral), shape (M, N)."""
    notes = []
    inner = adm.Y_rs @ _solve(adm.Y_s + adm.Y_ss, adm.Y_st, "Y_s + Y_ss", notes)
    H = _solve(adm.Y_r + adm.Y_rr, inner, "Y_r + Y_rr", notes)
    if B is not None:
        B = np.asarray(B, dtype=complex)
        if B.shape[0] != adm.N:
            raise InvalidInputError(f"precoder has {B.shape[0]} rows, expected N={adm.N}")
    return EquivalentChannel(H_eq=H, B=B, noise_variance=float(noise_variance))


def transmit_signal(H_eq, B, x, noise_variance=0.0, seed=None) -> np.ndarray:
    """y = H_eq B x + n with circularly-symmetric noise of variance ``noise_variance`` per user."""
    H_eq = np.asarray(H_eq, dtype=complex)
    B = np.asarray(B, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if H_eq.shape[1] != B.shape[0] or B.shape[1] != x.shape[0]:
        raise InvalidInputError(f"dimension mismatch: H_eq {H_eq.shape}, B {B.shape}, x {x.shape}")
    if noise_variance < 0:
        raise InvalidInputError("noise variance must be non-negative")
    y = H_eq @ (B @ x)
    if noise_variance > 0:
        rng = np.random.default_rng(seed)
        y = y + np.sqrt(noise_variance / 2) * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y
