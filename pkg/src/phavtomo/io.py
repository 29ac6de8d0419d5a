"""CSV and JSON interchange with schema validation and atomic writes.

Every CSV carries a mandatory header.  Floats are written with ``repr`` so a
file produced here survives read -> write byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from phavtomo.errors import ValidationError
from phavtomo.fock import FockDistribution
from phavtomo.sampling import QuadratureDataset, QuadratureHistogram

MAX_REPORTED = 10


@dataclass(frozen=True)
class Column:
    name: str
    integer: bool = False
    allow_nan: bool = False
    check: Optional[Callable[[float], bool]] = None
    requirement: str = ""


@dataclass(frozen=True)
class Schema:
    name: str
    columns: tuple[Column, ...]

    @property
    def header(self) -> list[str]:
        return [c.name for c in self.columns]


def _nonneg(v):
    return v >= 0


DATASET = Schema("dataset", (Column("pulse_index", integer=True, check=_nonneg, requirement=">= 0"),
                             Column("x")))
HISTOGRAM = Schema("histogram", (Column("bin_center"),
                                 Column("density", check=_nonneg, requirement=">= 0")))
FOCK = Schema("fock", (Column("n", integer=True, check=_nonneg, requirement=">= 0"),
                       Column("p", check=_nonneg, requirement=">= 0")))
TRACE = Schema("trace", (Column("delay_ps"), Column("mean_n", check=_nonneg, requirement=">= 0"),
                         Column("var_n", check=_nonneg, requirement=">= 0"),
                         Column("q", allow_nan=True), Column("q_det", allow_nan=True)))
SWEEP = Schema("sweep", (Column("axis_value"), Column("max_q"), Column("q_det_ref")))
FFT = Schema("fft", (Column("freq_thz"), Column("magnitude", check=_nonneg, requirement=">= 0")))
WIGNER = Schema("wigner", (Column("x"), Column("y"), Column("w")))
NOISE_POINTS = Schema("noise_points", (Column("mean", check=_nonneg, requirement=">= 0"),
                                       Column("variance", check=_nonneg, requirement=">= 0")))


def _parse(col: Column, text: str):
    """Parsed value, or an error message."""
    text = text.strip()
    if col.integer:
        try:
            return int(text), None
        except ValueError:
            return None, f"column {col.name!r}: {text!r} is not an integer"
    try:
        v = float(text)
    except ValueError:
        return None, f"column {col.name!r}: {text!r} is not a number"
    if math.isnan(v) and not col.allow_nan:
        return None, f"column {col.name!r}: NaN not allowed"
    if math.isinf(v):
        return None, f"column {col.name!r}: infinite value"
    if col.check is not None and not math.isnan(v) and not col.check(v):
        return None, f"column {col.name!r}: {text!r} violates {col.requirement}"
    return v, None


def _raise(path, schema, problems):
    shown = problems[:MAX_REPORTED]
    more = f"\n  ... and {len(problems) - MAX_REPORTED} more" if len(problems) > MAX_REPORTED else ""
    lines = "\n".join(f"  line {ln}: {msg}" for ln, msg in shown)
    raise ValidationError(f"{path}: invalid {schema.name} CSV\n{lines}{more}")


def read_csv(path, schema: Schema) -> dict[str, np.ndarray]:
    """Read and validate ``path`` against ``schema``; columns come back as arrays.

    Raises ``ValidationError`` listing the first violations with line numbers.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror or exc})") from None
    except UnicodeDecodeError:
        raise ValidationError(f"{path}: not a text CSV file") from None
    if not rows:
        raise ValidationError(f"{path}: empty file, expected header {','.join(schema.header)}")
    header = [h.strip() for h in rows[0]]
    if header != schema.header:
        raise ValidationError(
            f"{path}: line 1: header {','.join(header)!r} does not match {','.join(schema.header)!r}")
    problems = []
    values = {c.name: [] for c in schema.columns}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(schema.columns):
            problems.append((lineno, f"expected {len(schema.columns)} fields, got {len(row)}"))
            continue
        for col, cell in zip(schema.columns, row):
            v, err = _parse(col, cell)
            if err:
                problems.append((lineno, err))
            else:
                values[col.name].append(v)
    if problems:
        _raise(path, schema, problems)
    if not values[schema.columns[0].name]:
        raise ValidationError(f"{path}: no data rows")
    return {c.name: np.array(values[c.name], dtype=int if c.integer else float)
            for c in schema.columns}


def _atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(col: Column, v) -> str:
    return str(int(v)) if col.integer else repr(float(v))


def write_csv(path, schema: Schema, columns: dict) -> None:
    """Atomically write aligned ``columns`` (keyed by column name) under ``schema``."""
    arrays = [np.asarray(columns[c.name]).ravel() for c in schema.columns]
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise ValueError("columns have different lengths")
    lines = [",".join(schema.header)]
    for i in range(n):
        lines.append(",".join(_fmt(c, a[i]) for c, a in zip(schema.columns, arrays)))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# -- typed readers / writers --------------------------------------------------

def read_dataset(path) -> QuadratureDataset:
    cols = read_csv(path, DATASET)
    return QuadratureDataset(cols["x"])


def write_dataset(path, data: QuadratureDataset) -> None:
    write_csv(path, DATASET, {"pulse_index": np.arange(len(data)), "x": data.samples})


def read_histogram(path) -> QuadratureHistogram:
    cols = read_csv(path, HISTOGRAM)
    try:
        return QuadratureHistogram.from_density(cols["bin_center"], cols["density"])
    except (ValidationError, ValueError) as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_histogram(path, hist: QuadratureHistogram) -> None:
    write_csv(path, HISTOGRAM, {"bin_center": hist.centers, "density": hist.frequencies})


def read_fock(path) -> FockDistribution:
    cols = read_csv(path, FOCK)
    n = cols["n"]
    if not np.array_equal(n, np.arange(n.size)):
        raise ValidationError(f"{path}: column 'n' must run 0, 1, 2, ... without gaps")
    try:
        return FockDistribution(cols["p"])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_fock(path, d: FockDistribution) -> None:
    write_csv(path, FOCK, {"n": np.arange(d.probs.size), "p": d.probs})


def write_trace(path, trace) -> None:
    write_csv(path, TRACE, {"delay_ps": trace.delays, "mean_n": trace.mean_n,
                            "var_n": trace.var_n, "q": trace.q, "q_det": trace.q_det})
