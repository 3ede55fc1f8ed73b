"""Command-line front end: ``dmamodel <command> [options]``.

Every command reads one scenario file, writes CSV artifacts into ``--out`` and
returns an exit code: 0 success, 1 validation failure, 2 input error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np
import yaml

from . import __version__, csvio
from .admittance import (build_admittances, build_Yrs_los, connector_admittance_auto,
                         rayleigh_covariance, sample_rayleigh)
from .errors import DMAError, InvalidInputError, ModelViolationError
from .model import bundled_scenario_path, load_scenario
from .network import Excitation, equivalent_channel, lorentzian_sweep, solve
from .radiation import field_in_guide, gain_cut, gain_grid, guide_centerline, radiated_power

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

# Expected results for the bundled validation layout at P_s = 1 W, equal split, zero phase.
REFERENCE = {
    "P_t": 0.6077,
    "j": 0.1682,
    "j_t": 0.2266 + 0.0877j,
    "abs_j_s": (0.1546, 0.0838, 0.0418, 0.0276, 0.0285),
    "Y_0": 35.3387,
}
REFERENCE_RTOL = 0.02
CONNECTOR_RTOL = 1e-3


class Run:
    """Parsed arguments plus the loaded scenario and its provenance header."""

    def __init__(self, args):
        self.args = args
        self.path = Path(args.scenario) if args.scenario else bundled_scenario_path("validation")
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                self.scenario = load_scenario(self.path)
        except OSError as exc:
            raise InvalidInputError(f"cannot read scenario {self.path}: {exc.strerror}") from None
        self.warnings = [str(w.message) for w in caught]
        self.out = Path(args.out)
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise InvalidInputError(f"cannot create output directory {self.out}: {exc.strerror}") from None
        self.header = csvio.Header(
            version=__version__,
            scenario_sha256=csvio.scenario_hash(self.path),
            seed=args.seed,
            command=args.command,
            timestamp=not args.no_timestamp,
        )

    def file(self, name):
        return self.out / name


# --------------------------------------------------------------------------
# helpers


def _y_rs(run: Run):
    """User channel for this run, at dump precision so a saved Y_rs reproduces it exactly."""
    sc, args = run.scenario, run.args
    if getattr(args, "yrs", None):
        return csvio.read_matrix(args.yrs)
    if args.model == "rayleigh":
        if sc.M == 0:
            return np.zeros((0, sc.L), dtype=complex)
        return csvio.quantize(sample_rayleigh(rayleigh_covariance(sc), seed=args.seed))
    return csvio.quantize(build_Yrs_los(sc, farfield=args.farfield_los))


def _solve(run: Run):
    sc = run.scenario
    adm = build_admittances(sc, Y_rs=_y_rs(run))
    if sc.Y_0 is not None:
        excitation = Excitation.equal_power(sc.N, run.args.power)
    else:
        excitation = Excitation("transmit_currents", np.ones(sc.N, dtype=complex))
    return adm, solve(adm, excitation, Y_0=sc.Y_0, bilateral=run.args.bilateral)


def _power_rows(sol, P_rad=None):
    rows = []
    if sol.P_s is not None:
        rows.append(("P_s", sol.P_s))
    rows.append(("P_t", sol.P_t))
    if P_rad is not None:
        rows.append(("P_rad", P_rad))
    rows += [(f"P_d[{l}]", p) for l, p in enumerate(sol.P_d)]
    rows.append(("P_d_total", float(np.sum(sol.P_d))))
    rows += [(f"P_r[{m}]", p) for m, p in enumerate(sol.P_r)]
    return rows


# --------------------------------------------------------------------------
# commands


def cmd_validate(run: Run) -> int:
    """Reproduce the reference currents and powers and write report.csv."""
    sc = run.scenario
    adm = build_admittances(sc)
    sol = solve(adm, Excitation.equal_power(sc.N, 1.0), Y_0=sc.Y_0)
    checks = [("P_t", sol.P_t, REFERENCE["P_t"], REFERENCE_RTOL)]
    checks += [(f"j[{n}]", abs(v), REFERENCE["j"], REFERENCE_RTOL) for n, v in enumerate(sol.j)]
    for n, v in enumerate(sol.j_t):
        checks.append((f"re_j_t[{n}]", v.real, REFERENCE["j_t"].real, REFERENCE_RTOL))
        checks.append((f"im_j_t[{n}]", v.imag, REFERENCE["j_t"].imag, REFERENCE_RTOL))
    ref = REFERENCE["abs_j_s"]
    for l, v in enumerate(sol.j_s):
        checks.append((f"abs_j_s[{l}]", abs(v), ref[l % len(ref)], REFERENCE_RTOL))
    checks.append(("Y_0_auto", connector_admittance_auto(sc), REFERENCE["Y_0"], CONNECTOR_RTOL))

    rows, failed = [], []
    for name, value, expected, rtol in checks:
        err = abs(value - expected) / abs(expected)
        ok = err <= rtol
        rows.append((name, csvio.fmt(value), csvio.fmt(expected), csvio.fmt(err), csvio.fmt(rtol),
                     "pass" if ok else "fail"))
        if not ok:
            failed.append(f"{name}: computed {value:.6g}, expected {expected:.6g}, "
                          f"relative delta {err:.3g} > {rtol:g}")
    csvio.write_records(run.file("report.csv"),
                        ("quantity", "computed", "expected", "rel_error", "tolerance", "status"),
                        rows, run.header)
    for line in failed:
        print(f"FAIL {line}", file=sys.stderr)
    print(f"validate: {len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_solve(run: Run) -> int:
    sc = run.scenario
    adm, sol = _solve(run)
    blocks = {"j_t": sol.j_t, "v_t": sol.v_t, "j_s": sol.j_s, "v_s": sol.v_s,
              "j_r": sol.j_r, "v_r": sol.v_r, "Y_p": sol.Y_p}
    if sol.j is not None:
        blocks.update(j=sol.j, Y_in=sol.Y_in, gamma=sol.gamma, T=sol.T)
    csvio.write_blocks(run.file("solution.csv"), blocks, run.header)
    P_rad = radiated_power(sol, sc, quadrature_order=run.args.quadrature) if sc.L else 0.0
    csvio.write_powers(run.file("powers.csv"), _power_rows(sol, P_rad), run.header)
    for note in sol.notes:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK


def cmd_admittance(run: Run) -> int:
    adm = build_admittances(run.scenario, Y_rs=_y_rs(run))
    for name in ("Y_tt", "Y_st", "Y_ss", "Y_rr", "Y_rs", "Y_s", "Y_r"):
        csvio.write_matrix(run.file(f"{name}.csv"), getattr(adm, name), run.header)
    return EXIT_OK


def cmd_field(run: Run) -> int:
    sc, args = run.scenario, run.args
    _, sol = _solve(run)
    if not 0 <= args.guide < sc.N:
        raise InvalidInputError(f"--guide {args.guide} but the scenario has {sc.N} waveguides")
    points = guide_centerline(sc, args.guide, samples=args.samples or 200)
    probe = field_in_guide(sol, sc, args.guide, points)
    csvio.write_probe(run.file("probe.csv"), probe.positions, probe.values, run.header)
    return EXIT_OK


def cmd_pattern(run: Run) -> int:
    sc, args = run.scenario, run.args
    _, sol = _solve(run)
    n = args.samples or 91
    grid = gain_grid(sol, sc, n_theta=n, n_phi=n, reference=args.reference)
    T, Ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    csvio.write_grid(run.file("grid.csv"), T, Ph, grid.gain, run.header)
    phi, g = gain_cut(sol, sc, "theta", np.pi / 2, samples=2 * n - 1, reference=args.reference)
    csvio.write_grid(run.file("cut_theta_90.csv"), np.pi / 2, phi, g, run.header)
    theta, g = gain_cut(sol, sc, "phi", np.pi / 2, samples=2 * n - 1, reference=args.reference)
    csvio.write_grid(run.file("cut_phi_90.csv"), theta, np.pi / 2, g, run.header)
    P_rad = radiated_power(sol, sc, quadrature_order=args.quadrature)
    csvio.write_powers(run.file("powers.csv"), _power_rows(sol, P_rad), run.header)
    return EXIT_OK


def cmd_channel(run: Run) -> int:
    sc, args = run.scenario, run.args
    if sc.M == 0:
        raise InvalidInputError("channel needs users; add users.positions to the scenario")
    if args.model == "rayleigh" and not args.yrs:
        cov = rayleigh_covariance(sc)
        draws = sample_rayleigh(cov, seed=args.seed, size=args.samples or 1)
    else:
        draws = [_y_rs(run)]
    base = build_admittances(sc, Y_rs=np.zeros((sc.M, sc.L)))
    blocks = {}
    for s, Y_rs in enumerate(draws):
        blocks[f"H_eq[{s}]"] = equivalent_channel(base.replace(Y_rs=Y_rs)).H_eq
    csvio.write_blocks(run.file("channel.csv"), blocks, run.header)
    return EXIT_OK


def cmd_lorentzian(run: Run) -> int:
    args = run.args
    n = args.samples or 1001
    c = np.linspace(-args.c_max, args.c_max, n) * args.re_yss
    sweep = lorentzian_sweep(args.re_yss, c)
    rows = [(r.c, r.value.real, r.value.imag, r.amplitude, r.phase) for r in sweep]
    csvio.write_table(run.file("lorentzian.csv"), ("c", "re", "im", "amplitude", "phase_rad"), rows,
                      run.header)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "admittance": cmd_admittance,
    "field": cmd_field,
    "pattern": cmd_pattern,
    "channel": cmd_channel,
    "lorentzian": cmd_lorentzian,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmamodel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"dmamodel {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--scenario", metavar="PATH", help="scenario YAML (default: bundled validation layout)")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quadrature", type=int, default=64, help="radiated-power quadrature order")
    p.add_argument("--bilateral", action="store_true", help="keep user-to-array back-coupling")
    p.add_argument("--farfield-los", action="store_true", help="far-field form of the LoS channel")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    p.add_argument("--model", choices=("los", "rayleigh"), default="los")
    p.add_argument("--samples", type=int, help="sample count (channel draws, field points, grid size, sweep)")
    p.add_argument("--yrs", metavar="PATH", help="user-supplied Y_rs matrix dump, overrides --model")
    p.add_argument("--guide", type=int, default=0, help="waveguide index for field")
    p.add_argument("--power", type=float, default=1.0, help="supplied power in watts")
    p.add_argument("--reference", choices=("supplied", "transmitted", "radiated"), default="supplied",
                   help="gain reference power")
    p.add_argument("--re-yss", type=float, default=1.0, help="Re{Y_ss} for the lorentzian sweep")
    p.add_argument("--c-max", type=float, default=20.0, help="sweep half-range in units of Re{Y_ss}")
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.samples is not None and args.samples < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return EXIT_INPUT
    if args.quadrature < 2:
        print("error: --quadrature must be at least 2", file=sys.stderr)
        return EXIT_INPUT
    try:
        run = Run(args)
        for w in run.warnings:
            print(f"warning: {w}", file=sys.stderr)
        return COMMANDS[args.command](run)
    except (InvalidInputError, ModelViolationError, yaml.YAMLError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DMAError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
