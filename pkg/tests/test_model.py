import copy
import warnings

import numpy as np
import pytest
from scipy.constants import c as c0

import dmamodel as d
from dmamodel.model import centered_positions, parse_length

from conftest import scenario_from


def test_medium_derived_quantities():
    m = d.Medium.from_relative(10e9)
    assert m.wavelength == pytest.approx(c0 / 10e9, rel=1e-9)
    assert m.k == pytest.approx(2 * np.pi * 10e9 / c0, rel=1e-9)
    assert m.impedance == pytest.approx(376.730313, rel=1e-8)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.inf, np.nan])
def test_medium_rejects_nonpositive(bad):
    with pytest.raises(d.InvalidInputError):
        d.Medium(bad)


@pytest.mark.parametrize("text,metres", [
    (0.03, 0.03), ("110 mm", 0.110), ("2.5cm", 0.025), ("0.5 lambda", 0.015), ("1e-3 m", 1e-3),
    ("0.5 λ", 0.015),
])
def test_parse_length(text, metres):
    assert parse_length(text, 0.03) == pytest.approx(metres)


def test_parse_length_rejects_garbage():
    with pytest.raises(d.InvalidInputError):
        parse_length("three feet", 0.03)


def test_centered_positions():
    x = centered_positions(1.0, 4, 0.2)
    assert np.allclose(np.diff(x), 0.2)
    assert x[0] == pytest.approx(1.0 - x[-1])


def test_validation_geometry(validation):
    lam = validation.medium.wavelength
    g = validation.waveguides[0]
    assert (validation.N, validation.L, validation.M) == (2, 10, 0)
    assert g.a == pytest.approx(0.7318 * lam)
    assert g.S == pytest.approx(0.110)
    assert g.feed_z == pytest.approx(g.a / 2, rel=1e-3)
    assert np.allclose(validation.waveguides[1].origin, [0, 0, lam])
    x = validation.element_positions[:5, 0]
    assert np.allclose(np.diff(x), 0.6 * lam)
    assert x[0] + x[-1] == pytest.approx(g.S)
    assert np.allclose(validation.element_positions[:, 1], g.b)
    assert np.all(validation.Y_s == 2 - 15.7934j)
    assert validation.wavenumbers().single_mode


def test_close_feed_warns(config):
    with pytest.warns(d.GeometryWarning, match="from the feed"):
        d.build_scenario(config)


def test_single_mode_warning(validation):
    wide = d.WaveguideSpec(1.2 * validation.medium.wavelength, 0.01, 0.1)
    with pytest.warns(d.SingleModeWarning):
        kn = d.derive_wavenumbers(validation.medium, wide)
    assert not kn.single_mode


def test_below_cutoff_gives_evanescent_kx(validation):
    narrow = d.WaveguideSpec(0.4 * validation.medium.wavelength, 0.01, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        kn = d.derive_wavenumbers(validation.medium, narrow)
    assert kn.k_x.real == 0 and kn.k_x.imag < 0


def test_auto_defaults(config):
    config["connector"]["Y_0"] = "auto"
    config["users"] = {"positions": [[0, 1, 0]]}
    sc = scenario_from(config)
    m = sc.medium
    assert sc.Y_r[0] == pytest.approx(m.k * m.omega * m.permittivity / (6 * np.pi))
    assert sc.Y_0 == pytest.approx(d.connector_admittance_auto(sc))


def test_per_element_terminations(config):
    config["terminations"]["Y_s"] = [[1.0, float(i)] for i in range(10)]
    sc = scenario_from(config)
    assert np.allclose(sc.Y_s.imag, np.arange(10))


def test_explicit_placement(config):
    config["layout"]["element_placement"] = ["20 mm", "40 mm", "60 mm", "80 mm", "100 mm"]
    sc = scenario_from(config)
    assert np.allclose(sc.element_positions[5:, 0], [0.02, 0.04, 0.06, 0.08, 0.1])


@pytest.mark.parametrize("mutate,match", [
    (lambda c: c["layout"].update(elements_per_guide=40), "outside|wall|duplicate"),
    (lambda c: c["layout"].update(element_placement=["20 mm"] * 5), "same position"),
    (lambda c: c["layout"].update(waveguide_spacing="0.5 lambda"), "spacing"),
    (lambda c: c["terminations"].update(Y_s=[1, 2, 3]), "entries"),
    (lambda c: c.update(users={"positions": [[0, -1, 0]]}), "y"),
    (lambda c: c["medium"].update(frequency_hz="ten"), "frequency"),
    (lambda c: c.update(extra=1), "invalid"),
    (lambda c: c["connector"].update(Y_0=-3), "invalid"),
])
def test_invalid_configs(config, mutate, match):
    cfg = copy.deepcopy(config)
    mutate(cfg)
    with pytest.raises(d.InvalidInputError, match=match):
        scenario_from(cfg)


def test_scenario_is_immutable(validation):
    with pytest.raises(ValueError):
        validation.Y_s[0] = 0
    with pytest.raises(AttributeError):
        validation.Y_0 = 1.0


def test_with_terminations(validation):
    sc = validation.with_terminations(Y_s=np.full(10, 1 + 1j))
    assert np.all(sc.Y_s == 1 + 1j)
    assert np.all(validation.Y_s == 2 - 15.7934j)


def test_load_scenario_bad_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("medium: [unclosed")
    with pytest.raises(d.InvalidInputError):
        d.load_scenario(p)
