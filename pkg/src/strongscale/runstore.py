"""Reading and writing run records.

CSV is the interchange format (header row required, ``.`` decimals, blank
cells for absent values, config tags joined with ``;``).  A JSON store mirrors
the same records for programmatic use and is what the command line persists
between invocations.

Floats are written with ``repr`` so a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable

from .records import RunRecord, ScalingSeries, ValidationError, group_series

COLUMNS = [
    "platform",
    "config",
    "P",
    "ranks_per_node",
    "n",
    "E",
    "N",
    "t_step",
    "steps_timed",
    "v_iters",
    "p_iters",
    "flops_per_rank",
]
_INT_COLUMNS = ("P", "ranks_per_node", "n", "E", "N", "steps_timed")
_FLOAT_COLUMNS = ("t_step", "v_iters", "p_iters", "flops_per_rank")
_REQUIRED = ("platform", "P", "t_step")

STORE_FORMAT = "strongscale-store"
STORE_VERSION = 1


class RecordFileError(ValidationError):
    """A row of a record file is malformed; ``row`` counts the header as row 1."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


def _parse_int(value: str) -> int:
    value = value.strip()
    # Accept "1e6"-style or "8.0" only when they denote an exact integer.
    try:
        return int(value)
    except ValueError:
        f = float(value)
        if not f.is_integer():
            raise ValueError(f"{value!r} is not an integer") from None
        return int(f)


def record_from_row(row: dict, rownum: int) -> RunRecord:
    """Validate one row (string cells, or JSON values) into a :class:`RunRecord`."""
    values: dict = {}
    for col in COLUMNS:
        raw = row.get(col)
        if isinstance(raw, str):
            raw = raw.strip()
            if raw == "":
                raw = None
        values[col] = raw
    missing = [c for c in _REQUIRED if values[c] is None]
    if missing:
        raise RecordFileError(rownum, f"missing required column(s) {', '.join(missing)}")

    try:
        for col in _INT_COLUMNS:
            if values[col] is not None:
                values[col] = _parse_int(str(values[col]))
        for col in _FLOAT_COLUMNS:
            if values[col] is not None:
                values[col] = float(values[col])
    except ValueError as exc:
        raise RecordFileError(rownum, str(exc)) from None

    config = values["config"]
    if config is None:
        tags: frozenset[str] = frozenset()
    elif isinstance(config, str):
        tags = frozenset(t.strip() for t in config.split(";") if t.strip())
    else:
        tags = frozenset(config)

    n = values["n"]
    if n is None:
        if values["E"] is None or values["N"] is None:
            raise RecordFileError(rownum, "n is blank and cannot be derived without both E and N")
        n = values["E"] * values["N"] ** 3

    try:
        return RunRecord(
            platform=str(values["platform"]),
            config=tags,
            P=values["P"],
            ranks_per_node=values["ranks_per_node"] if values["ranks_per_node"] is not None else 1,
            n=n,
            E=values["E"],
            N=values["N"],
            t_step=values["t_step"],
            steps_timed=values["steps_timed"] if values["steps_timed"] is not None else 1,
            v_iters=values["v_iters"],
            p_iters=values["p_iters"],
            flops_per_rank=values["flops_per_rank"],
        )
    except (ValidationError, OverflowError) as exc:
        raise RecordFileError(rownum, str(exc)) from None


def read_csv(text: str) -> list[RunRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    header = [h.strip() for h in reader.fieldnames]
    unknown = [h for h in header if h not in COLUMNS]
    if unknown:
        raise RecordFileError(1, f"unknown column(s) {', '.join(unknown)}")
    for col in _REQUIRED:
        if col not in header:
            raise RecordFileError(1, f"header lacks required column {col!r}")
    reader.fieldnames = header
    return [record_from_row(row, rownum) for rownum, row in enumerate(reader, start=2)]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, frozenset):
        return ";".join(sorted(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def record_to_row(rec: RunRecord) -> dict[str, str]:
    return {col: _cell(getattr(rec, col)) for col in COLUMNS}


def write_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(record_to_row(rec))
    return buf.getvalue()


def record_to_json(rec: RunRecord) -> dict:
    d = {col: getattr(rec, col) for col in COLUMNS}
    d["config"] = sorted(rec.config)
    return d


def read_json_records(text: str) -> list[RunRecord]:
    data = json.loads(text) if text.strip() else []
    if isinstance(data, dict):
        data = data.get("records", [])
    if not isinstance(data, list):
        raise RecordFileError(0, "expected a list of records or a store object")
    return [record_from_row(row, i) for i, row in enumerate(data, start=1)]


def load_records(path: str | Path, fmt: str = "auto") -> list[RunRecord]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if fmt == "auto":
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    if fmt == "csv":
        return read_csv(text)
    if fmt == "json":
        return read_json_records(text)
    raise ValueError(f"unknown record format {fmt!r}")


def store_document(records: list[RunRecord]) -> dict:
    series = group_series(records) if records else []
    return {
        "format": STORE_FORMAT,
        "version": STORE_VERSION,
        "records": [record_to_json(r) for r in records],
        "series": [
            {
                "problem_id": s.problem_id,
                "platform": s.platform,
                "config": sorted(s.config),
                "n": s.n,
                "ranks": s.ranks,
            }
            for s in series
        ],
    }


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_store(path: str | Path, records: list[RunRecord]) -> None:
    atomic_write(path, json.dumps(store_document(records), indent=2) + "\n")


def load_store(path: str | Path) -> list[RunRecord]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict) or data.get("format") != STORE_FORMAT:
        raise ValidationError(f"{path} is not a {STORE_FORMAT} file")
    return read_json_records(json.dumps(data["records"]))


def select_series(series: list[ScalingSeries], selector: str) -> ScalingSeries:
    """Pick exactly one series with a selector like ``platform=Crusher,config~gpudirect,n=95011000``.

    ``key=value`` matches exactly and ``config~tag`` requires the tag to be
    present.  Keys: ``platform``, ``config``, ``n``, ``id``.  Zero or several
    matches raise :class:`LookupError`.
    """
    matches = filter_series(series, selector)
    if not matches:
        raise LookupError(f"no series matches {selector!r}")
    if len(matches) > 1:
        ids = ", ".join(s.problem_id for s in matches)
        raise LookupError(f"selector {selector!r} is ambiguous: {ids}")
    return matches[0]


def filter_series(series: list[ScalingSeries], selector: str) -> list[ScalingSeries]:
    clauses = [c.strip() for c in selector.split(",") if c.strip()]
    out = list(series)
    for clause in clauses:
        if "~" in clause and ("=" not in clause or clause.index("~") < clause.index("=")):
            key, value = (p.strip() for p in clause.split("~", 1))
            if key == "config":
                out = [s for s in out if value in s.config]
            elif key == "platform":
                out = [s for s in out if value in (s.platform or "")]
            elif key == "id":
                out = [s for s in out if value in s.problem_id]
            else:
                raise ValueError(f"unknown selector key {key!r}")
        elif "=" in clause:
            key, value = (p.strip() for p in clause.split("=", 1))
            if key == "platform":
                out = [s for s in out if s.platform == value]
            elif key == "n":
                want = _parse_int(value)
                out = [s for s in out if s.n == want]
            elif key == "config":
                tags = frozenset(t for t in value.split(";") if t)
                out = [s for s in out if s.config == tags]
            elif key == "id":
                out = [s for s in out if s.problem_id == value]
            else:
                raise ValueError(f"unknown selector key {key!r}")
        else:
            raise ValueError(f"malformed selector clause {clause!r}")
    return out
