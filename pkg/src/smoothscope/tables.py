"""Reading point-value tables and writing smoothness maps."""

from __future__ import annotations

import csv
import re
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .geometry import DuplicatePointError, PointSet
from .salsa import SmoothnessReport

__all__ = [
    "DataError",
    "bucket_of",
    "emit_report",
    "fmt_float",
    "ingest",
    "read_coordinates",
    "write_dataset",
]

_WS = re.compile(r"\s+")


class DataError(ValueError):
    """Malformed or inadmissible input data."""


def fmt_float(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def _read_rows(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    header = None
    rows: list[tuple[int, list[str]]] = []
    comma = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            comma = "," in line
        cells = [c.strip() for c in line.split(",")] if comma else _WS.split(line)
        if header is None:
            header = cells
        else:
            rows.append((lineno, cells))
    if header is None:
        raise DataError(f"{path}: no header row")
    return header, rows


def _parse_matrix(path, header, rows) -> tuple[np.ndarray, list[int]]:
    ncol = len(header)
    data = np.empty((len(rows), ncol))
    lines = []
    for r, (lineno, cells) in enumerate(rows):
        if len(cells) != ncol:
            raise DataError(f"{path}: row at line {lineno} has {len(cells)} columns, expected {ncol}")
        for c, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: line {lineno}, column {c + 1} ({header[c]}): cannot parse {cell!r}") from None
            if not np.isfinite(v):
                raise DataError(f"{path}: line {lineno}, column {c + 1} ({header[c]}): non-finite value")
            data[r, c] = v
        lines.append(lineno)
    return data, lines


def _pointset(path, coords: np.ndarray, lines: list[int]) -> PointSet:
    try:
        return PointSet(coords)
    except DuplicatePointError as exc:
        raise DataError(
            f"{path}: duplicate coordinates at lines {lines[exc.first]} and {lines[exc.second]}"
        ) from None


def ingest(path) -> tuple[PointSet, np.ndarray]:
    """Read a table with columns ``x1 .. xd, f`` (header row required).

    Columns are separated by commas or whitespace (decided by the header);
    ``#`` lines are comments.  Non-finite entries and duplicate sites are
    errors that name the offending lines.
    """
    header, rows = _read_rows(path)
    if len(header) < 2:
        raise DataError(f"{path}: need at least one coordinate column and a value column")
    if not rows:
        raise DataError(f"{path}: no data rows")
    data, lines = _parse_matrix(path, header, rows)
    return _pointset(path, data[:, :-1], lines), data[:, -1].copy()


def read_coordinates(path, dim: int) -> PointSet:
    """Read a center table; the first ``dim`` columns are used."""
    header, rows = _read_rows(path)
    if len(header) < dim:
        raise DataError(f"{path}: need {dim} coordinate columns")
    if not rows:
        raise DataError(f"{path}: no rows")
    data, lines = _parse_matrix(path, header, rows)
    return _pointset(path, data[:, :dim], lines)


def write_dataset(path, points: PointSet, values) -> Path:
    """Write ``x1 .. xd, f`` with 17-digit floats (round-trips through :func:`ingest`)."""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(points.dim)] + ["f"])
        for p, v in zip(points.coords, values):
            w.writerow([fmt_float(c) for c in p] + [fmt_float(v)])
    return path


def bucket_of(beta: float, tau: float) -> str:
    """Smoothness class of an estimate: jump, corner, intermediate or smooth."""
    if not np.isfinite(beta):
        return "degenerate"
    if beta < 0.75:
        return "jump"
    if beta < 1.75:
        return "corner"
    if beta < tau - 0.25:
        return "intermediate"
    return "smooth"


def _cell(x: float) -> str:
    return fmt_float(x) if np.isfinite(x) else ""


def emit_report(
    reports: Sequence[SmoothnessReport],
    out_dir,
    *,
    parameters: dict[str, str] | None = None,
    raw: bool = False,
) -> Path:
    """Write ``smoothness.csv``, ``summary.txt`` and optionally ``raw/`` dumps."""
    if not reports:
        raise DataError("no reports to write")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {out}: {exc.strerror}") from None
    dim = len(reports[0].center)
    tau = reports[0].tau

    with (out / "smoothness.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [f"x{i + 1}" for i in range(dim)]
            + ["beta_l2", "beta_native", "r2_l2", "r2_native", "status", "beta_native_interpolant", "beta_native_increment"]
        )
        for r in reports:
            r2_l2 = r.fit_l2.r_squared if r.fit_l2 else np.nan
            r2_nat = r.fit_native.r_squared if r.fit_native else np.nan
            w.writerow(
                [fmt_float(c) for c in r.center]
                + [_cell(r.beta_l2), _cell(r.beta_native), _cell(r2_l2), _cell(r2_nat), r.status]
                + [_cell(r.beta_native_interpolant), _cell(r.beta_native_increment)]
            )

    if raw:
        raw_dir = out / "raw"
        raw_dir.mkdir(exist_ok=True)
        width = max(5, len(str(len(reports))))
        for i, r in enumerate(reports):
            with (raw_dir / f"center_{i:0{width}d}.csv").open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                fh.write("# center " + " ".join(fmt_float(c) for c in r.center) + "\n")
                if r.error:
                    fh.write(f"# error {r.error}\n")
                w.writerow(["m", "h", "c2", "cN", "dN", "jitter_coarse", "jitter_fine"])
                flags = r.conditioning_flags
                for m in range(len(r.h_values)):
                    w.writerow(
                        [m + 1, fmt_float(r.h_values[m]), fmt_float(r.c2_sequence[m]),
                         fmt_float(r.cN_sequence[m]), fmt_float(r.dN_sequence[m]),
                         int(flags[m]), int(flags[m + 1])]
                    )

    lines = ["# parameters"]
    for k, v in sorted((parameters or {}).items()):
        lines.append(f"{k} = {v}")
    lines.append("")
    lines.append("# counts")
    lines.append(f"centers = {len(reports)}")
    statuses = [r.status for r in reports]
    lines.append(f"ok = {statuses.count('ok')}")
    lines.append(f"degenerate = {statuses.count('degenerate')}")
    lines.append("")
    lines.append(f"# smoothness classes (cuts 0.75, 1.75, {fmt_float(tau - 0.25)})")
    classes = ("jump", "corner", "intermediate", "smooth", "degenerate")
    for label, getter in (("beta_l2", lambda r: r.beta_l2), ("beta_native", lambda r: r.beta_native)):
        counts = {c: 0 for c in classes}
        for r in reports:
            counts[bucket_of(getter(r), tau)] += 1
        lines.append(f"{label}: " + ", ".join(f"{c}={counts[c]}" for c in classes))
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out
