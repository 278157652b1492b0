"""Curve CSV files, CUSUM export, and JSON helpers.

A curve file holds one curve per row and one grid point per column. An
optional first row ``t=<value>,t=<value>,...`` gives the grid; without it
the uniform grid on [0, 1] is assumed.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from fcpreg.core import FloatArray, PairedFunctionalSample, SampleGrid
from fcpreg.cusum import CusumField
from fcpreg.errors import FcpError, InvalidInput
from fcpreg.spectral import EigenSystem


class CurveFileError(FcpError, ValueError):
    stage = "io"


def _fmt(v: float) -> str:
    return repr(float(v))


def read_curve_file(path: str | Path) -> tuple[FloatArray, FloatArray | None]:
    """Return the ``n x T`` value matrix and the header grid (or ``None``)."""
    path = Path(path)
    rows: list[list[float]] = []
    grid = None
    width = None
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise CurveFileError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            if lineno == 1 and cells[0].startswith("t="):
                try:
                    grid = np.array([float(c[2:]) for c in cells])
                except ValueError:
                    raise CurveFileError(f"{path}:{lineno}: malformed grid header") from None
                if not all(c.startswith("t=") for c in cells):
                    raise CurveFileError(f"{path}:{lineno}: every header cell must be t=<value>")
                width = len(cells)
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise CurveFileError(
                    f"{path}:{lineno}: expected {width} columns, found {len(cells)}"
                )
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                raise CurveFileError(f"{path}:{lineno}: non-numeric value") from None
            if not all(math.isfinite(v) for v in vals):
                raise CurveFileError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise CurveFileError(f"{path}: no curve rows")
    return np.array(rows), grid


def load_sample(x_path: str | Path, y_path: str | Path) -> PairedFunctionalSample:
    x, gx = read_curve_file(x_path)
    y, gy = read_curve_file(y_path)
    if x.shape != y.shape:
        raise CurveFileError(
            f"{x_path} has shape {x.shape} but {y_path} has shape {y.shape}"
        )
    if gx is not None and gy is not None and not np.array_equal(gx, gy):
        raise CurveFileError("grid headers of the two files differ")
    points = gx if gx is not None else gy
    try:
        grid = SampleGrid.uniform(x.shape[1]) if points is None else SampleGrid(points)
    except InvalidInput as exc:
        raise CurveFileError(f"invalid grid header: {exc.args[0]}") from exc
    return PairedFunctionalSample(grid, x, y)


def _header(grid: SampleGrid) -> list[str]:
    return [f"t={_fmt(t)}" for t in grid.points]


def write_matrix(path: str | Path, values: FloatArray, grid: SampleGrid | None = None) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if grid is not None:
            w.writerow(_header(grid))
        for row in values:
            w.writerow([_fmt(v) for v in row])


def write_sample(sample: PairedFunctionalSample, x_path, y_path, header: bool = True) -> None:
    grid = sample.grid if header else None
    write_matrix(x_path, sample.x, grid)
    write_matrix(y_path, sample.y, grid)


def write_cusum(path: str | Path, field: CusumField) -> None:
    """Rows ``i = 0..n`` of the CUSUM field under a grid header."""
    write_matrix(path, field.values, field.grid)


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


def eigensystem_to_dict(eigs: EigenSystem) -> dict:
    return {
        "grid": eigs.grid.points.tolist(),
        "weights": eigs.grid.weights.tolist(),
        "eigenvalues": eigs.eigenvalues.tolist(),
        "eigenfunctions": eigs.eigenfunctions.T.tolist(),
        "trace": eigs.trace,
    }


def eigensystem_from_dict(d: dict) -> EigenSystem:
    """Inverse of :func:`eigensystem_to_dict`; ``eigenfunctions`` is a list of
    curves, one per eigenvalue."""
    try:
        grid = SampleGrid(d["grid"], d.get("weights"))
        lam = np.asarray(d["eigenvalues"], dtype=np.float64)
        phi = np.asarray(d["eigenfunctions"], dtype=np.float64)
    except KeyError as exc:
        raise CurveFileError(f"eigensystem JSON lacks field {exc.args[0]!r}") from None
    if phi.shape != (lam.size, len(grid)):
        raise CurveFileError(
            f"eigenfunctions must have shape ({lam.size}, {len(grid)}), got {phi.shape}"
        )
    return EigenSystem.from_pairs(grid, lam, phi.T, d.get("trace"))


def read_eigensystem(path: str | Path) -> EigenSystem:
    try:
        return eigensystem_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise CurveFileError(f"{path}: {exc}") from exc


def load_schema(name: str) -> dict:
    """JSON schema shipped with the package, e.g. ``"test_report"``."""
    text = resources.files("fcpreg.schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)
