"""Physical medium, waveguide geometry and the scenario data model.

All quantities are SI. Admittances are in siemens, positions in metres,
and the time convention is exp(+i*omega*t) with outgoing waves exp(-i*k*R).
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml
from scipy.constants import epsilon_0, mu_0

from .errors import GeometryWarning, InvalidInputError, SingleModeWarning


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Medium:
    """Homogeneous lossless medium at a single frequency."""

    frequency_hz: float
    permittivity: float = epsilon_0
    permeability: float = mu_0

    def __post_init__(self):
        for name in ("frequency_hz", "permittivity", "permeability"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidInputError(f"{name} must be positive and finite, got {value!r}")

    @classmethod
    def from_relative(cls, frequency_hz, relative_permittivity=1.0, relative_permeability=1.0):
        return cls(float(frequency_hz), relative_permittivity * epsilon_0,
                   relative_permeability * mu_0)

    @property
    def omega(self) -> float:
        return 2 * np.pi * self.frequency_hz

    @property
    def k(self) -> float:
        return self.omega * np.sqrt(self.permittivity * self.permeability)

    @property
    def wavelength(self) -> float:
        return 2 * np.pi / self.k

    @property
    def impedance(self) -> float:
        """Intrinsic wave impedance sqrt(mu/eps) in ohms."""
        return float(np.sqrt(self.permeability / self.permittivity))


@dataclass(frozen=True)
class WaveguideSpec:
    """Rectangular guide of width ``a`` (z), height ``b`` (y) and length ``S`` (x).

    ``origin`` is the global position of the local corner (x, y, z) = (0, 0, 0).
    The RF feed sits at local x = 0, z = ``feed_z``; radiating slots are cut
    in the upper wall y = b.
    """

    a: float
    b: float
    S: float
    feed_z: float | None = None
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("a", "b", "S"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidInputError(f"waveguide {name} must be positive, got {value!r}")
        feed_z = self.a / 2 if self.feed_z is None else float(self.feed_z)
        if not 0 < feed_z < self.a:
            raise InvalidInputError(f"feed_z={feed_z} must lie strictly inside (0, a={self.a})")
        object.__setattr__(self, "feed_z", feed_z)
        origin = _frozen(self.origin)
        if origin.shape != (3,):
            raise InvalidInputError("waveguide origin must be a 3-vector")
        object.__setattr__(self, "origin", origin)

    def to_local(self, points):
        return np.asarray(points, dtype=float) - self.origin

    def to_global(self, points):
        return np.asarray(points, dtype=float) + self.origin

    @property
    def feed_position(self) -> np.ndarray:
        """Global position of the feed dipole (mid-height; the TE10 model has no y dependence)."""
        return self.to_global([0.0, self.b / 2, self.feed_z])

    def contains(self, local_points, tol=1e-9) -> np.ndarray:
        p = np.atleast_2d(local_points)
        lo = -tol * np.array([self.S, self.b, self.a])
        hi = np.array([self.S, self.b, self.a]) * (1 + tol)
        return np.all((p >= lo) & (p <= hi), axis=1)


@dataclass(frozen=True)
class Wavenumbers:
    k: float
    k_x: complex
    single_mode: bool = True


def guided_wavenumber(k, cutoff):
    """Longitudinal wavenumber with the branch Re{sqrt} - i*Im{sqrt}.

    Real for propagating modes, negative imaginary for evanescent ones.
    """
    root = np.sqrt(np.asarray(k**2 - cutoff**2, dtype=complex))
    return root.real - 1j * np.abs(root.imag)


def derive_wavenumbers(medium: Medium, guide: WaveguideSpec, warn=True) -> Wavenumbers:
    """Free-space and TE10 guided wavenumbers for ``guide`` filled with ``medium``.

    A guide that does not support exactly one propagating mode (lambda/2 < a < lambda
    and b < lambda/2) is flagged through ``single_mode=False`` and a
    :class:`SingleModeWarning`; the formulas keep working with complex ``k_x``.
    """
    k = medium.k
    lam = medium.wavelength
    k_x = complex(guided_wavenumber(k, np.pi / guide.a))
    single_mode = (lam / 2 < guide.a < lam) and (guide.b < lam / 2)
    if not single_mode and warn:
        warnings.warn(
            f"guide a={guide.a / lam:.4g} lambda, b={guide.b / lam:.4g} lambda is not single-mode TE10",
            SingleModeWarning, stacklevel=2)
    return Wavenumbers(k=k, k_x=k_x, single_mode=single_mode)


@dataclass(frozen=True)
class Scenario:
    """Complete physical description of a DMA downlink setup.

    ``element_positions`` and ``user_positions`` are global coordinates.
    ``element_guides[l]`` is the index of the guide hosting element ``l``.
    ``Y_0`` is the connector admittance, or None when reflections are not needed.
    """

    medium: Medium
    waveguides: tuple
    element_guides: np.ndarray
    element_positions: np.ndarray
    user_positions: np.ndarray
    Y_s: np.ndarray
    Y_r: np.ndarray
    Y_0: float | None = None
    polarization_loss: float = 1.0

    def __post_init__(self):
        guides = _frozen(self.element_guides, int).reshape(-1)
        elements = _frozen(self.element_positions).reshape(-1, 3)
        users = _frozen(self.user_positions).reshape(-1, 3)
        Y_s = _frozen(self.Y_s, complex).reshape(-1)
        Y_r = _frozen(self.Y_r, complex).reshape(-1)
        for name, value in (("element_guides", guides), ("element_positions", elements),
                            ("user_positions", users), ("Y_s", Y_s), ("Y_r", Y_r)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "waveguides", tuple(self.waveguides))
        self._validate()

    def _validate(self):
        N, L, M = self.N, len(self.element_positions), len(self.user_positions)
        if N == 0:
            raise InvalidInputError("scenario needs at least one waveguide")
        if len(self.element_guides) != L:
            raise InvalidInputError(f"{len(self.element_guides)} guide indices for {L} elements")
        if len(self.Y_s) != L:
            raise InvalidInputError(f"Y_s has {len(self.Y_s)} entries, expected L={L}")
        if len(self.Y_r) != M:
            raise InvalidInputError(f"Y_r has {len(self.Y_r)} entries, expected M={M}")
        if not (np.all(np.isfinite(self.Y_s)) and np.all(np.isfinite(self.Y_r))):
            raise InvalidInputError("terminations must be finite")
        if self.Y_0 is not None and not (np.isfinite(self.Y_0) and self.Y_0 > 0):
            raise InvalidInputError(f"connector admittance must be positive, got {self.Y_0!r}")
        if not 0 < self.polarization_loss <= 1:
            raise InvalidInputError("polarization loss must lie in (0, 1]")
        lam = self.medium.wavelength
        for l, (n, p) in enumerate(zip(self.element_guides, self.element_positions)):
            if not 0 <= n < N:
                raise InvalidInputError(f"element {l} refers to missing waveguide {n}")
            g = self.waveguides[n]
            x, y, z = g.to_local(p)
            tol = 1e-9 * max(g.a, g.b, g.S)
            if abs(y - g.b) > tol:
                raise InvalidInputError(f"element {l} is off the upper wall of guide {n} (y={y:.6g}, b={g.b:.6g})")
            if not 0 < x < g.S:
                raise InvalidInputError(f"element {l} at x={x:.6g} lies outside guide {n} (0 < x < {g.S:.6g})")
            if not 0 < z < g.a:
                raise InvalidInputError(f"element {l} at z={z:.6g} lies outside guide {n} (0 < z < {g.a:.6g})")
        if L > 1:
            d = np.linalg.norm(self.element_positions[:, None] - self.element_positions[None], axis=-1)
            d[np.diag_indices(L)] = np.inf
            if np.min(d) <= 1e-12 * lam:
                i, j = np.unravel_index(np.argmin(d), d.shape)
                raise InvalidInputError(f"elements {i} and {j} share the same position")
        if M and np.any(self.user_positions[:, 1] <= 0):
            bad = int(np.flatnonzero(self.user_positions[:, 1] <= 0)[0])
            raise InvalidInputError(f"user {bad} is behind the surface (y <= 0)")
        for n, g in enumerate(self.waveguides):
            on_guide = self.element_guides == n
            if np.any(on_guide):
                nearest = np.min(g.to_local(self.element_positions[on_guide])[:, 0])
                if nearest < lam:
                    warnings.warn(
                        f"first element of guide {n} is {nearest / lam:.3f} lambda from the feed;"
                        " the feed model assumes at least one wavelength", GeometryWarning, stacklevel=3)

    @property
    def N(self) -> int:
        return len(self.waveguides)

    @property
    def L(self) -> int:
        return len(self.element_positions)

    @property
    def M(self) -> int:
        return len(self.user_positions)

    def wavenumbers(self, guide_index=0, warn=False) -> Wavenumbers:
        return derive_wavenumbers(self.medium, self.waveguides[guide_index], warn=warn)

    def with_terminations(self, Y_s=None, Y_r=None) -> "Scenario":
        from dataclasses import replace
        kwargs = {}
        if Y_s is not None:
            kwargs["Y_s"] = np.broadcast_to(np.asarray(Y_s, complex), (self.L,))
        if Y_r is not None:
            kwargs["Y_r"] = np.broadcast_to(np.asarray(Y_r, complex), (self.M,))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GeometryWarning)
            return replace(self, **kwargs)

    def with_users(self, positions, Y_r) -> "Scenario":
        from dataclasses import replace
        positions = np.asarray(positions, float).reshape(-1, 3)
        Y_r = np.broadcast_to(np.asarray(Y_r, complex), (len(positions),))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GeometryWarning)
            return replace(self, user_positions=positions, Y_r=Y_r)


# --------------------------------------------------------------------------
# configuration files

_LENGTH = {"anyOf": [{"type": "number"}, {"type": "string"}]}
_COMPLEX = {"anyOf": [{"type": "number"},
                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["medium", "waveguide", "layout", "terminations"],
    "properties": {
        "medium": {
            "type": "object",
            "required": ["frequency_hz"],
            "properties": {
                "frequency_hz": {"anyOf": [{"type": "number"}, {"type": "string"}]},
                "relative_permittivity": {"type": "number", "exclusiveMinimum": 0},
                "relative_permeability": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "waveguide": {
            "type": "object",
            "required": ["a", "b", "S"],
            "properties": {
                "a": _LENGTH, "b": _LENGTH, "S": _LENGTH, "feed_z": _LENGTH,
                "origin": {"type": "array", "items": _LENGTH, "minItems": 3, "maxItems": 3},
            },
            "additionalProperties": False,
        },
        "layout": {
            "type": "object",
            "required": ["n_waveguides", "elements_per_guide"],
            "properties": {
                "n_waveguides": {"type": "integer", "minimum": 1},
                "waveguide_spacing": _LENGTH,
                "elements_per_guide": {"type": "integer", "minimum": 0},
                "element_spacing": _LENGTH,
                "element_z": _LENGTH,
                "element_placement": {
                    "anyOf": [
                        {"enum": ["centered"]},
                        {"type": "array", "items": _LENGTH},
                        {"type": "array", "items": {"type": "array", "items": _LENGTH}},
                    ]
                },
            },
            "additionalProperties": False,
        },
        "terminations": {
            "type": "object",
            "required": ["Y_s"],
            "properties": {
                "Y_s": {"anyOf": [_COMPLEX, {"type": "array", "items": _COMPLEX}]},
            },
            "additionalProperties": False,
        },
        "users": {
            "type": "object",
            "properties": {
                "positions": {"type": "array",
                              "items": {"type": "array", "items": _LENGTH, "minItems": 3, "maxItems": 3}},
                "Y_r": {"anyOf": [{"enum": ["auto"]}, _COMPLEX, {"type": "array", "items": _COMPLEX}]},
                "polarization_loss": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
            "additionalProperties": False,
        },
        "connector": {
            "type": "object",
            "properties": {"Y_0": {"anyOf": [{"enum": ["auto"]}, {"type": "number", "exclusiveMinimum": 0}]}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_UNITS = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6}
_LENGTH_RE = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?\d+)?)\s*(lambda|λ|m|cm|mm|um)?\s*$")


def parse_length(value, wavelength) -> float:
    """Parse ``0.03``, ``"110 mm"`` or ``"0.7318 lambda"`` into metres."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    match = _LENGTH_RE.match(str(value))
    if not match:
        raise InvalidInputError(f"cannot parse length {value!r}")
    number, unit = float(match.group(1)), match.group(2) or "m"
    if unit in ("lambda", "λ"):
        return number * wavelength
    return number * _UNITS[unit]


def _parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def _parse_complex_list(value, count, name):
    if isinstance(value, (int, float)) or (isinstance(value, list) and len(value) == 2
                                          and all(isinstance(v, (int, float)) for v in value)):
        return np.full(count, _parse_complex(value))
    out = np.array([_parse_complex(v) for v in value], dtype=complex)
    if len(out) != count:
        raise InvalidInputError(f"{name} has {len(out)} entries, expected {count}")
    return out


def centered_positions(length, count, spacing):
    """Element x-coordinates spaced ``spacing`` apart and centred in ``[0, length]``."""
    if count == 0:
        return np.zeros(0)
    first = (length - (count - 1) * spacing) / 2
    return first + spacing * np.arange(count)


def build_scenario(config: dict) -> Scenario:
    """Validate a parsed configuration mapping and resolve it into a :class:`Scenario`."""
    try:
        jsonschema.validate(config, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidInputError(f"scenario config invalid at {where}: {exc.message}") from None

    med = config["medium"]
    try:
        frequency = float(med["frequency_hz"])
    except ValueError:
        raise InvalidInputError(f"frequency_hz {med['frequency_hz']!r} is not a number") from None
    medium = Medium.from_relative(frequency, med.get("relative_permittivity", 1.0),
                                  med.get("relative_permeability", 1.0))
    lam = medium.wavelength

    def length(v):
        return parse_length(v, lam)

    wg = config["waveguide"]
    a, b, S = length(wg["a"]), length(wg["b"]), length(wg["S"])
    feed_z = length(wg["feed_z"]) if "feed_z" in wg else None
    origin = np.array([length(v) for v in wg.get("origin", [0, 0, 0])])

    lay = config["layout"]
    N = lay["n_waveguides"]
    spacing_wg = length(lay.get("waveguide_spacing", 0.0))
    if N > 1 and spacing_wg < a:
        raise InvalidInputError(f"waveguide_spacing {spacing_wg:.6g} m is smaller than the guide width a")
    guides = [WaveguideSpec(a, b, S, feed_z, origin + np.array([0.0, 0.0, n * spacing_wg])) for n in range(N)]

    per_guide = lay["elements_per_guide"]
    placement = lay.get("element_placement", "centered")
    if placement == "centered":
        if per_guide > 1 and "element_spacing" not in lay:
            raise InvalidInputError("centered placement needs layout.element_spacing")
        xs = [centered_positions(S, per_guide, length(lay.get("element_spacing", 0.0)))] * N
    elif placement and isinstance(placement[0], list):
        if len(placement) != N:
            raise InvalidInputError(f"element_placement lists {len(placement)} guides, expected {N}")
        xs = [np.array([length(v) for v in row]) for row in placement]
    else:
        xs = [np.array([length(v) for v in placement])] * N
    for row in xs:
        if len(row) != per_guide:
            raise InvalidInputError(f"element_placement has {len(row)} positions, expected {per_guide}")
    element_z = length(lay["element_z"]) if "element_z" in lay else a / 2

    element_guides, element_positions = [], []
    for n, g in enumerate(guides):
        for x in xs[n]:
            element_guides.append(n)
            element_positions.append(g.to_global([x, b, element_z]))
    L = len(element_positions)

    Y_s = _parse_complex_list(config["terminations"]["Y_s"], L, "terminations.Y_s")

    users_cfg = config.get("users", {}) or {}
    user_positions = np.array([[length(v) for v in p] for p in users_cfg.get("positions", [])],
                              dtype=float).reshape(-1, 3)
    M = len(user_positions)
    Y_r_cfg = users_cfg.get("Y_r", "auto")
    if Y_r_cfg == "auto":
        # conjugate match to the real user self-admittance k*omega*eps/(6*pi)
        Y_r = np.full(M, medium.k * medium.omega * medium.permittivity / (6 * np.pi), dtype=complex)
    else:
        Y_r = _parse_complex_list(Y_r_cfg, M, "users.Y_r")

    Y_0_cfg = (config.get("connector") or {}).get("Y_0", "auto")
    if Y_0_cfg == "auto":
        from .admittance import connector_admittance_auto
        Y_0 = connector_admittance_auto(medium, guides[0])
    else:
        Y_0 = float(Y_0_cfg)

    return Scenario(
        medium=medium,
        waveguides=tuple(guides),
        element_guides=np.array(element_guides, dtype=int),
        element_positions=np.array(element_positions, dtype=float).reshape(-1, 3),
        user_positions=user_positions,
        Y_s=Y_s,
        Y_r=Y_r,
        Y_0=Y_0,
        polarization_loss=users_cfg.get("polarization_loss", 1.0),
    )


def read_config(path) -> dict:
    text = Path(path).read_text()
    try:
        config = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidInputError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(config, dict):
        raise InvalidInputError(f"{path}: top level must be a mapping")
    return config


def load_scenario(path) -> Scenario:
    return build_scenario(read_config(path))


def bundled_scenario_path(name="validation") -> Path:
    return Path(str(resources.files("dmamodel") / "data" / f"{name}.yaml"))


def validation_scenario() -> Scenario:
    """The two-guide, ten-slot validation layout shipped with the package."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeometryWarning)
        return load_scenario(bundled_scenario_path("validation"))
