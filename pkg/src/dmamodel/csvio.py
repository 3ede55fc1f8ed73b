"""Plain-text CSV artifacts: matrix dumps, power tables, gain grids and field probes.

Every file opens with ``#`` comment lines recording the tool version, the
SHA-256 of the scenario file, the seed and (optionally) a UTC timestamp.
Numbers are written in scientific notation with 9 significant digits.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

FLOAT_FORMAT = "{:.8e}"
MATRIX_HEADER = ("row", "col", "re", "im")
POWER_HEADER = ("name", "value_watts")
GRID_HEADER = ("theta_rad", "phi_rad", "gain_linear", "gain_dbi")
PROBE_HEADER = ("x_m", "y_m", "z_m", "re_Hz", "im_Hz", "abs_Hz", "arg_Hz_rad")


def fmt(value) -> str:
    return FLOAT_FORMAT.format(float(value))


def quantize(values) -> np.ndarray:
    """Round complex values to the dump precision, so written and re-read data agree exactly."""
    A = np.asarray(values, dtype=complex)
    to_dump = np.vectorize(lambda x: float(fmt(x)), otypes=[float])
    return to_dump(A.real) + 1j * to_dump(A.imag) if A.size else A


def scenario_hash(path=None, text=None) -> str:
    if text is None:
        text = Path(path).read_bytes()
    elif isinstance(text, str):
        text = text.encode()
    return hashlib.sha256(text).hexdigest()


@dataclass(frozen=True)
class Header:
    """Provenance written at the top of each artifact."""

    version: str
    scenario_sha256: str
    seed: int | None
    command: str = ""
    timestamp: bool = True

    def lines(self):
        out = [f"# dmamodel {self.version}",
               f"# scenario_sha256: {self.scenario_sha256}",
               f"# seed: {self.seed}"]
        if self.command:
            out.append(f"# command: {self.command}")
        if self.timestamp:
            now = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
            out.append(f"# generated: {now}")
        return out


def _write(path, header: Header | None, body: str):
    text = "".join(line + "\n" for line in (header.lines() if header else [])) + body
    Path(path).write_text(text, newline="")
    return Path(path)


def _table(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _matrix_rows(matrix):
    A = np.asarray(matrix, dtype=complex)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise InvalidInputError(f"matrix dump needs a 1-D or 2-D array, got shape {A.shape}")
    return [(i, j, fmt(A[i, j].real), fmt(A[i, j].imag)) for i in range(A.shape[0]) for j in range(A.shape[1])]


def matrix_text(matrix) -> str:
    return _table(MATRIX_HEADER, _matrix_rows(matrix))


def write_matrix(path, matrix, header: Header | None = None):
    """Dump a complex matrix (vectors become one column) as ``row,col,re,im``."""
    return _write(path, header, matrix_text(matrix))


def write_blocks(path, blocks: dict, header: Header | None = None):
    """Several named matrices in one file, each introduced by ``# block: <name>``."""
    body = "".join(f"# block: {name}\n" + matrix_text(value) for name, value in blocks.items())
    return _write(path, header, body)


def _parse_matrix(lines, source):
    rows = [r for r in csv.reader(lines) if r]
    if not rows or tuple(c.strip() for c in rows[0]) != MATRIX_HEADER:
        raise InvalidInputError(f"{source}: expected header {','.join(MATRIX_HEADER)}")
    entries = {}
    try:
        for r in rows[1:]:
            i, j, re, im = r
            entries[int(i), int(j)] = complex(float(re), float(im))
    except ValueError:
        raise InvalidInputError(f"{source}: malformed matrix row {r!r}") from None
    if not entries:
        return np.zeros((0, 0), dtype=complex)
    shape = tuple(1 + max(k[d] for k in entries) for d in (0, 1))
    if len(entries) != shape[0] * shape[1] or min(min(k) for k in entries) < 0:
        raise InvalidInputError(f"{source}: matrix entries do not fill a {shape[0]}x{shape[1]} grid")
    A = np.empty(shape, dtype=complex)
    for (i, j), v in entries.items():
        A[i, j] = v
    return A


def _content_lines(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None
    return text.splitlines()


def read_matrix(path) -> np.ndarray:
    """Inverse of :func:`write_matrix`; comment lines are skipped."""
    return _parse_matrix([ln for ln in _content_lines(path) if not ln.startswith("#")], path)


def read_blocks(path) -> dict:
    blocks, name, current = {}, None, []
    for line in _content_lines(path):
        if line.startswith("# block:"):
            if name is not None:
                blocks[name] = _parse_matrix(current, f"{path}[{name}]")
            name, current = line.split(":", 1)[1].strip(), []
        elif not line.startswith("#") and name is not None:
            current.append(line)
    if name is not None:
        blocks[name] = _parse_matrix(current, f"{path}[{name}]")
    return blocks


def read_header(path) -> dict:
    """Key/value pairs of the leading comment lines."""
    out = {}
    for line in _content_lines(path):
        if not line.startswith("#") or line.startswith("# block:"):
            break
        body = line[1:].strip()
        if ":" in body:
            key, value = body.split(":", 1)
            out[key.strip()] = value.strip()
        elif body.startswith("dmamodel "):
            out["version"] = body.split(None, 1)[1]
    return out


def write_powers(path, powers, header: Header | None = None):
    """``name,value_watts`` rows from an iterable of (name, value) pairs."""
    return _write(path, header, _table(POWER_HEADER, [(n, fmt(v)) for n, v in powers]))


def read_powers(path) -> dict:
    rows = list(csv.reader(ln for ln in _content_lines(path) if not ln.startswith("#")))
    return {name: float(value) for name, value in rows[1:]}


def write_grid(path, theta, phi, gain, header: Header | None = None):
    theta, phi, gain = (np.asarray(v, dtype=float).reshape(-1) for v in np.broadcast_arrays(theta, phi, gain))
    with np.errstate(divide="ignore"):
        dbi = 10 * np.log10(gain)
    rows = [(fmt(t), fmt(p), fmt(g), fmt(d)) for t, p, g, d in zip(theta, phi, gain, dbi)]
    return _write(path, header, _table(GRID_HEADER, rows))


def write_probe(path, positions, values, header: Header | None = None):
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    values = np.asarray(values, dtype=complex).reshape(-1)
    rows = [(*(fmt(c) for c in p), fmt(v.real), fmt(v.imag), fmt(abs(v)), fmt(np.angle(v)))
            for p, v in zip(positions, values)]
    return _write(path, header, _table(PROBE_HEADER, rows))


def read_table(path) -> tuple[list, np.ndarray]:
    """Column names and a float array for any numeric artifact (grid, probe, sweep)."""
    rows = list(csv.reader(ln for ln in _content_lines(path) if not ln.startswith("#")))
    if not rows:
        raise InvalidInputError(f"{path}: empty table")
    return rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))


def write_table(path, columns, rows, header: Header | None = None):
    return _write(path, header, _table(columns, [[fmt(v) for v in r] for r in rows]))


def write_records(path, columns, rows, header: Header | None = None):
    """Mixed text/number rows written verbatim (numbers should be pre-formatted)."""
    return _write(path, header, _table(columns, rows))
