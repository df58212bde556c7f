"""File formats: censored-data CSVs in and results out.

Two input layouts are auto-detected by header. An interval file has columns
left,right[,multiplicity] with "inf" (or an empty cell) for a right-censored
right endpoint. A visit-record file has columns id,time,status with one row
per screening visit; records are summarized into intervals on load, which
also yields per-individual visit counts for the "nm" penalty.

JSON payloads are strict JSON: non-finite floats are serialized as the
strings "inf" / "-inf" and restored on load. All file writes go through a
temp file and os.replace, so readers never see a half-written file.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
import tempfile

import numpy as np

from .data import (
    INF,
    ObservationRecord,
    estimate_time_frame,
    summarize_observations,
    validate_records,
)
from .exceptions import ParseError
from .inference import ConfidenceBands
from .npmle import GriddedDensity, StepEstimate

INTERVAL_COLUMNS = ("left", "right")
RECORD_COLUMNS = ("id", "time", "status")


# ---------------------------------------------------------------- writing

def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a same-directory temp file and atomic rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return None
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(payload, path: str | None = None) -> str:
    """Serialize to strict JSON (sorted keys); write to path or return only."""
    text = json.dumps(_sanitize(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"
    if path is not None:
        atomic_write_text(path, text)
    return text


def _restore_float(value, what: str) -> float:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ParseError(f"{what}: cannot parse {value!r} as a number") from None
    if isinstance(value, (int, float)):
        return float(value)
    raise ParseError(f"{what}: expected a number, got {type(value).__name__}")


def step_to_payload(est: StepEstimate) -> dict:
    """Raw step-fit JSON payload: support, masses, convergence facts."""
    return {
        "support": [[q, p] for q, p in est.support],
        "masses": est.masses,
        "converged": est.converged,
        "iterations": est.n_iter,
    }


def gridded_to_payload(density: GriddedDensity) -> dict:
    return {
        "grid_start": density.grid_start,
        "step": density.step,
        "bandwidth": density.bandwidth,
        "total_mass": density.total_mass,
        "values": density.values,
    }


def gridded_from_payload(payload: dict) -> GriddedDensity:
    try:
        values = [_restore_float(v, "values") for v in payload["values"]]
        return GriddedDensity(
            grid_start=_restore_float(payload["grid_start"], "grid_start"),
            step=_restore_float(payload["step"], "step"),
            values=np.asarray(values),
            bandwidth=_restore_float(payload.get("bandwidth", 0.0), "bandwidth"),
        )
    except KeyError as exc:
        raise ParseError(f"density JSON is missing key {exc.args[0]!r}") from None


def load_density_json(path: str) -> GriddedDensity:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", line=exc.lineno) from None
    if not isinstance(payload, dict):
        raise ParseError("density JSON must be an object")
    return gridded_from_payload(payload)


def _format_time(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".12g")


def write_curve_csv(
    path: str, taus, raw_density, raw_survival, smooth_density, smooth_survival
) -> None:
    rows = ["tau,raw_density,raw_survival,smooth_density,smooth_survival"]
    for t, rd, rs, sd, ss in zip(taus, raw_density, raw_survival, smooth_density, smooth_survival):
        rows.append(f"{_format_time(t)},{rd:.12g},{rs:.12g},{sd:.12g},{ss:.12g}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def write_bands_csv(path: str, bands: ConfidenceBands) -> None:
    rows = ["tau,raw_lo,raw_hi,smooth_lo,smooth_hi"]
    for i, t in enumerate(bands.grid):
        rows.append(
            f"{_format_time(float(t))},{bands.raw_lower[i]:.12g},{bands.raw_upper[i]:.12g},"
            f"{bands.smooth_lower[i]:.12g},{bands.smooth_upper[i]:.12g}"
        )
    atomic_write_text(path, "\n".join(rows) + "\n")


def write_imputation_csv(path: str, left, right, imputed, valid, ids=None) -> None:
    """id,left,right,imputed rows; rows that could not be imputed stay blank.

    ids defaults to the 0-based row number.
    """
    rows = ["id,left,right,imputed"]
    for i, (l, r, x, ok) in enumerate(zip(left, right, imputed, valid)):
        cell = f"{x:.12g}" if ok else ""
        name = str(ids[i]) if ids is not None else str(i)
        rows.append(f"{name},{_format_time(float(l))},{_format_time(float(r))},{cell}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def write_replicates_csv(path: str, results) -> None:
    """Long-format per-replicate metrics, one scenario result per block.

    Accepts any iterable of objects with .config.name and .replicates (a
    mapping metric name -> per-replicate values). NaN values become blanks.
    """
    rows = ["scenario,replicate,metric,value"]
    for res in results:
        name = res.config.name
        for metric in sorted(res.replicates):
            for r, v in enumerate(res.replicates[metric]):
                v = float(v)
                cell = "" if math.isnan(v) else f"{v:.12g}"
                rows.append(f"{name},{r},{metric},{cell}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def write_intervals_csv(path: str, left, right, multiplicity=None) -> None:
    rows = ["left,right,multiplicity"]
    mult = np.ones(len(left), dtype=int) if multiplicity is None else multiplicity
    for l, r, k in zip(left, right, mult):
        rows.append(f"{_format_time(float(l))},{_format_time(float(r))},{int(k)}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def write_records_csv(path: str, records: list[ObservationRecord]) -> None:
    rows = ["id,time,status"]
    for rec in records:
        rows.append(f"{rec.individual_id},{_format_time(rec.time)},{rec.status}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def write_onsets_csv(path: str, onsets) -> None:
    """Single-column onset file; +inf / NaN (never diseased) become blanks.

    Blank cells are written quoted ("") so a one-column blank row survives
    CSV parsing as a row; a bare empty line would be skipped and shift every
    later onset against its interval.
    """
    rows = ["onset"]
    for x in onsets:
        x = float(x)
        rows.append('""' if (math.isinf(x) or math.isnan(x)) else f"{x:.12g}")
    atomic_write_text(path, "\n".join(rows) + "\n")


# ---------------------------------------------------------------- reading

def _open_csv(path: str):
    try:
        return open(path, encoding="utf-8-sig", newline="")
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc.strerror}") from None


def _header(row) -> list[str]:
    return [cell.strip().lower() for cell in row]


def detect_csv_kind(path: str) -> str:
    """"intervals" or "records", decided by the header row alone."""
    with _open_csv(path) as fh:
        try:
            head = _header(next(csv.reader(fh)))
        except StopIteration:
            raise ParseError("empty file", line=1) from None
    if set(INTERVAL_COLUMNS) <= set(head):
        return "intervals"
    if set(RECORD_COLUMNS) <= set(head):
        return "records"
    raise ParseError(
        f"unrecognized header {head!r}; expected columns {INTERVAL_COLUMNS} "
        f"or {RECORD_COLUMNS}",
        line=1,
    )


def _parse_float(cell: str, line: int, column: str, allow_blank_inf: bool = False) -> float:
    text = cell.strip()
    if text == "" and allow_blank_inf:
        return INF
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: cannot parse {cell!r} as a number", line=line) from None
    if math.isnan(value):
        raise ParseError(f"column {column!r}: NaN is not a valid time", line=line)
    return value


def read_intervals_csv(path: str):
    """(left, right, multiplicity) arrays from an interval file."""
    lefts, rights, mults = [], [], []
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            head = _header(next(reader))
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        try:
            i_left = head.index("left")
            i_right = head.index("right")
        except ValueError:
            raise ParseError(f"header must contain 'left' and 'right', got {head!r}", line=1) from None
        i_mult = head.index("multiplicity") if "multiplicity" in head else None

        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(head):
                raise ParseError(f"expected {len(head)} columns, got {len(row)}", line=line)
            left = _parse_float(row[i_left], line, "left")
            right = _parse_float(row[i_right], line, "right", allow_blank_inf=True)
            if left < 0:
                raise ParseError(f"left endpoint {left!r} is negative", line=line)
            if math.isinf(left):
                raise ParseError("left endpoint cannot be infinite", line=line)
            if right < left:
                raise ParseError(f"right endpoint {right!r} < left endpoint {left!r}", line=line)
            mult = 1
            if i_mult is not None and row[i_mult].strip() != "":
                try:
                    mult = int(row[i_mult])
                except ValueError:
                    raise ParseError(
                        f"column 'multiplicity': cannot parse {row[i_mult]!r} as an integer",
                        line=line,
                    ) from None
                if mult < 1:
                    raise ParseError(f"multiplicity must be >= 1, got {mult}", line=line)
            lefts.append(left)
            rights.append(right)
            mults.append(mult)
    if not lefts:
        raise ParseError("no data rows found")
    return (
        np.asarray(lefts, dtype=float),
        np.asarray(rights, dtype=float),
        np.asarray(mults, dtype=np.int64),
    )


def read_records_csv(path: str) -> list[ObservationRecord]:
    """One ObservationRecord per visit row of an id,time,status file."""
    out = []
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            head = _header(next(reader))
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        try:
            i_id = head.index("id")
            i_time = head.index("time")
            i_status = head.index("status")
        except ValueError:
            raise ParseError(
                f"header must contain 'id', 'time' and 'status', got {head!r}", line=1
            ) from None
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(head):
                raise ParseError(f"expected {len(head)} columns, got {len(row)}", line=line)
            time = _parse_float(row[i_time], line, "time")
            status_text = row[i_status].strip()
            if status_text not in ("0", "1"):
                raise ParseError(f"column 'status': expected 0 or 1, got {row[i_status]!r}", line=line)
            try:
                out.append(
                    ObservationRecord(
                        individual_id=row[i_id].strip(),
                        time=time,
                        status=int(status_text),
                    )
                )
            except Exception as exc:
                raise ParseError(str(exc), line=line) from None
    if not out:
        raise ParseError("no data rows found")
    return out


def read_onsets_csv(path: str) -> np.ndarray:
    """Single 'onset' column; blank cells become NaN (onset unknown)."""
    out = []
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            head = _header(next(reader))
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if "onset" not in head:
            raise ParseError(f"header must contain 'onset', got {head!r}", line=1)
        i_onset = head.index("onset")
        for line, row in enumerate(reader, start=2):
            # a quoted blank is a data row (unknown onset); [] is a blank line
            if not row:
                continue
            text = row[i_onset].strip()
            if text == "":
                out.append(float("nan"))
                continue
            value = _parse_float(text, line, "onset")
            if value < 0 or math.isinf(value):
                raise ParseError(f"onset must be a finite non-negative age, got {text!r}", line=line)
            out.append(value)
    if not out:
        raise ParseError("no data rows found")
    return np.asarray(out, dtype=float)


def read_censored_data(path: str):
    """Load either input layout.

    Returns (left, right, multiplicity, visit_counts, frame). visit_counts
    and frame are None for interval files; for record files they hold the
    per-individual visit count and the frame spanned by the visit times
    (information an interval file has already summarized away).
    """
    kind = detect_csv_kind(path)
    if kind == "intervals":
        left, right, mult = read_intervals_csv(path)
        return left, right, mult, None, None
    records = read_records_csv(path)
    try:
        series = validate_records(records)
        intervals = [summarize_observations(s) for s in series]
        frame = estimate_time_frame(records)
    except Exception as exc:
        raise ParseError(str(exc)) from None
    left = np.array([iv.left for iv in intervals])
    right = np.array([iv.right for iv in intervals])
    mult = np.ones(len(intervals), dtype=np.int64)
    counts = np.array([len(s) for s in series], dtype=np.int64)
    return left, right, mult, counts, frame


def print_or_write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)
