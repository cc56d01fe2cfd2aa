"""File formats: sample and shot CSVs, density-matrix and report JSON.

CSV files are UTF-8 with exact headers (``theta_rad,x_a,x_b`` for samples,
``n_a,n_b,n_tot`` for shots), decimal points, no thousands separators.
Floats are written with shortest round-trip precision, so identical data
produce identical bytes.

The density-matrix JSON stores the cutoff, the basis ordering tag, and the
real and imaginary parts as nested arrays.  Readers reject any file whose
stated ordering differs from the canonical row-major (nA, nB) layout, and
validate Hermiticity, unit trace, and positivity before returning a state.
"""

import json
from pathlib import Path

import numpy as np

from .fock import (DENSITY_MATRIX_ORDERING, DensityMatrix, FockSpace,
                   HERMITIAN_ATOL, MIN_EIGENVALUE_FLOOR, TRACE_ATOL)
from .homodyne import QuadratureSample, ShotRecord

SAMPLES_HEADER = "theta_rad,x_a,x_b"
SHOTS_HEADER = "n_a,n_b,n_tot"


class EmptyDataError(ValueError):
    """A data file parsed fine but contains no rows."""


def write_samples(path, samples: list[QuadratureSample]) -> None:
    lines = [SAMPLES_HEADER]
    lines.extend(f"{s.theta!r},{s.x_a!r},{s.x_b!r}" for s in samples)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_samples(path) -> list[QuadratureSample]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != SAMPLES_HEADER:
        raise ValueError(f"{path}: expected header {SAMPLES_HEADER!r}")
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}: line {lineno}: expected 3 fields, got {len(parts)}")
        try:
            theta, x_a, x_b = (float(p) for p in parts)
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
        samples.append(QuadratureSample(theta, x_a, x_b))
    if not samples:
        raise EmptyDataError(f"{path}: no samples")
    return samples


def write_shots(path, shots: list[ShotRecord]) -> None:
    lines = [SHOTS_HEADER]
    lines.extend(f"{s.n_a},{s.n_b},{s.n_tot}" for s in shots)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_shots(path) -> list[ShotRecord]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != SHOTS_HEADER:
        raise ValueError(f"{path}: expected header {SHOTS_HEADER!r}")
    shots = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}: line {lineno}: expected 3 fields, got {len(parts)}")
        try:
            n_a, n_b, n_tot = (int(p) for p in parts)
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: non-integer field") from None
        shots.append(ShotRecord(n_a, n_b, n_tot))
    if not shots:
        raise EmptyDataError(f"{path}: no shots")
    return shots


def density_matrix_to_dict(rho: DensityMatrix) -> dict:
    return {
        "n_cut": rho.space.n_cut,
        "ordering": DENSITY_MATRIX_ORDERING,
        "re": rho.entries.real.tolist(),
        "im": rho.entries.imag.tolist(),
    }


def density_matrix_from_dict(d: dict) -> DensityMatrix:
    ordering = d.get("ordering")
    if ordering != DENSITY_MATRIX_ORDERING:
        raise ValueError(f"unsupported basis ordering {ordering!r}; "
                         f"expected {DENSITY_MATRIX_ORDERING!r}")
    space = FockSpace(int(d["n_cut"]))
    entries = np.asarray(d["re"], dtype=np.float64) + 1j * np.asarray(d["im"], dtype=np.float64)
    if entries.shape != (space.dim, space.dim):
        raise ValueError(f"matrix shape {entries.shape} does not match n_cut={space.n_cut}")
    herm = float(np.max(np.abs(entries - entries.conj().T)))
    if herm > HERMITIAN_ATOL:
        raise ValueError(f"violates Hermiticity invariant: max |rho - rho^dag| = {herm:.3e}")
    tr = complex(entries.trace())
    if abs(tr - 1.0) > max(TRACE_ATOL, 1e-12 * space.dim):
        raise ValueError(f"violates unit-trace invariant: trace = {tr.real:.12g}")
    min_eig = float(np.linalg.eigvalsh((entries + entries.conj().T) / 2.0)[0])
    if min_eig < MIN_EIGENVALUE_FLOOR:
        raise ValueError(f"violates positivity invariant: min eigenvalue = {min_eig:.3e}")
    return DensityMatrix(space, entries)


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_density_matrix(path, rho: DensityMatrix) -> None:
    write_json(path, density_matrix_to_dict(rho))


def read_density_matrix(path) -> DensityMatrix:
    return density_matrix_from_dict(read_json(path))


def write_csv_rows(path, header: str, rows) -> None:
    """Write rows of floats/ints under a fixed header with repr formatting."""
    lines = [header]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, int) else repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
