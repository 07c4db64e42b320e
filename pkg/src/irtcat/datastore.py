"""Ingestion, validation and persistence.

Three file surfaces live here: response-log files (line-delimited JSON
records, or CSV with an ``examinee_id,question_id,correct`` header and an
optional ``concept`` column), the versioned pool file (human-diffable JSON;
floats use Python's shortest round-trip repr so every value re-parses to
the identical double), and the append-only session event log. All writes
go through a temp file + rename, so readers only ever see complete
snapshots.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import CalibratedPool, FitReport, ResponseLog
from .errors import DuplicateLogWarning, ParseError, SchemaError, VersionMismatchError
from .irt import ItemParams

POOL_FORMAT_VERSION = 1

# Above this many examinees the pool stores a 1000-quantile sketch of the
# ability distribution instead of the full sorted vector; normalization then
# stays accurate to ~0.1%.
FULL_ABILITY_LIMIT = 100_000
SKETCH_QUANTILES = 1001

CSV_HEADER_REQUIRED = ("examinee_id", "question_id", "correct")


@dataclass(frozen=True)
class DatasetManifest:
    """Counts describing one response-log dataset."""

    name: str
    examinee_count: int
    question_count: int
    log_count: int
    concepts: dict  # concept -> distinct question count

    def format_text(self) -> str:
        lines = [
            f"dataset: {self.name}",
            f"  examinees: {self.examinee_count}",
            f"  questions: {self.question_count}",
            f"  logs:      {self.log_count}",
        ]
        for concept, count in sorted(self.concepts.items()):
            lines.append(f"  concept {concept}: {count} questions")
        return "\n".join(lines)


def _parse_correct(raw, line_number: int) -> int:
    if isinstance(raw, bool):
        raise ParseError(line_number, f"correct must be 0 or 1, got {raw!r}")
    if isinstance(raw, int) and raw in (0, 1):
        return raw
    if isinstance(raw, str) and raw.strip() in ("0", "1"):
        return int(raw.strip())
    raise ParseError(line_number, f"correct must be 0 or 1, got {raw!r}")


def _parse_csv_line(line: str, line_number: int, columns: list[str]) -> ResponseLog:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) != len(columns):
        raise ParseError(line_number, f"expected {len(columns)} fields, got {len(parts)}")
    record = dict(zip(columns, parts))
    if not record["examinee_id"] or not record["question_id"]:
        raise ParseError(line_number, "empty examinee_id or question_id")
    return ResponseLog(
        examinee_id=record["examinee_id"],
        question_id=record["question_id"],
        correct=_parse_correct(record["correct"], line_number),
        concept=record.get("concept") or None,
    )


def _parse_json_line(line: str, line_number: int) -> ResponseLog:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(line_number, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ParseError(line_number, "record must be a JSON object")
    try:
        examinee = obj["examinee_id"]
        question = obj["question_id"]
        correct = obj["correct"]
    except KeyError as exc:
        raise ParseError(line_number, f"missing field {exc.args[0]!r}") from exc
    if not isinstance(examinee, str) or not isinstance(question, str) or not examinee or not question:
        raise ParseError(line_number, "examinee_id and question_id must be non-empty strings")
    concept = obj.get("concept")
    if concept is not None and not isinstance(concept, str):
        raise ParseError(line_number, "concept must be a string when present")
    return ResponseLog(examinee, question, _parse_correct(correct, line_number), concept)


def ingest_logs(source, name: str | None = None) -> tuple[list[ResponseLog], DatasetManifest]:
    """Read and validate a response-log file (CSV with header, or JSONL).

    Duplicate (examinee, question) pairs keep the first occurrence and are
    reported through a DuplicateLogWarning. Malformed lines raise ParseError
    with their 1-based line number.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        name = name or path.stem
        fh = path.open("r", encoding="utf-8")
        close = True
    else:
        fh = source if isinstance(source, io.TextIOBase) else io.StringIO(str(source))
        name = name or "stream"
        close = False

    logs: list[ResponseLog] = []
    seen: set[tuple[str, str]] = set()
    duplicates: list[tuple[str, str]] = []
    csv_columns: list[str] | None = None
    try:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line_number == 1 and not line.startswith("{"):
                header = [h.strip() for h in line.split(",")]
                if tuple(header[:3]) != CSV_HEADER_REQUIRED or len(header) > 4 or (
                        len(header) == 4 and header[3] != "concept"):
                    raise ParseError(1, f"unrecognized CSV header {line!r}")
                csv_columns = header
                continue
            if csv_columns is not None:
                log = _parse_csv_line(line, line_number, csv_columns)
            else:
                log = _parse_json_line(line, line_number)
            key = (log.examinee_id, log.question_id)
            if key in seen:
                duplicates.append(key)
                continue
            seen.add(key)
            logs.append(log)
    finally:
        if close:
            fh.close()

    if duplicates:
        warnings.warn(
            f"dropped {len(duplicates)} duplicate (examinee, question) pairs "
            f"(first: {duplicates[0]})", DuplicateLogWarning, stacklevel=2)

    concept_questions: dict[str, set[str]] = {}
    for log in logs:
        if log.concept is not None:
            concept_questions.setdefault(log.concept, set()).add(log.question_id)
    manifest = DatasetManifest(
        name=name,
        examinee_count=len({l.examinee_id for l in logs}),
        question_count=len({l.question_id for l in logs}),
        log_count=len(logs),
        concepts={k: len(v) for k, v in sorted(concept_questions.items())},
    )
    return logs, manifest


# ---------------------------------------------------------------------------
# Pool files
# ---------------------------------------------------------------------------

def _atomic_write_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_pool(pool: CalibratedPool, path, *, config=None, dataset_digest: str | None = None) -> Path:
    """Persist a pool atomically. ``config``/``dataset_digest`` become provenance."""
    path = Path(path)
    items = []
    for qid in pool.question_ids:
        item = pool.items[qid]
        record = {
            "question_id": qid,
            "concept": item.concept,
            "alpha": item.alpha,
            "beta": item.beta,
            "c": item.c,
        }
        if qid in pool.content:
            record["content"] = pool.content[qid]
        items.append(record)

    abilities = np.sort(np.asarray(pool.human_abilities, dtype=float))
    if abilities.size <= FULL_ABILITY_LIMIT:
        summary = {"kind": "full", "count": int(abilities.size),
                   "values": [float(v) for v in abilities]}
    else:
        qs = np.quantile(abilities, np.linspace(0.0, 1.0, SKETCH_QUANTILES))
        summary = {"kind": "quantiles", "count": int(abilities.size),
                   "values": [float(v) for v in qs]}

    fit = pool.fit_report
    payload = {
        "format_version": POOL_FORMAT_VERSION,
        "items": items,
        "human_ability_summary": summary,
        "provenance": {
            "config": dict(config) if config else None,
            "dataset_digest": dataset_digest,
            "fit": {
                "train_loglik": fit.train_loglik,
                "val_loglik": fit.val_loglik,
                "epochs_run": fit.epochs_run,
                "n_train_logs": fit.n_train_logs,
                "n_val_logs": fit.n_val_logs,
                "low_confidence": list(fit.low_confidence),
                "train_path": list(fit.train_path),
            },
        },
    }
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _require(payload: dict, key: str, kind, where: str):
    if key not in payload:
        raise SchemaError(f"{where}: missing key {key!r}")
    value = payload[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise SchemaError(f"{where}: {key!r} must be {kind}, got {type(value).__name__}")
    return value


def load_pool(path) -> CalibratedPool:
    """Read a pool file back; inverse of save_pool for full ability vectors."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc.msg})") from exc
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: top level must be an object")
    version = payload.get("format_version")
    if version is None:
        raise SchemaError(f"{path}: missing format_version")
    if version != POOL_FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format_version {version} is not supported (this build reads "
            f"{POOL_FORMAT_VERSION}); re-save the pool with a matching version")

    provenance = payload.get("provenance") or {}
    config = provenance.get("config") or {}

    def bounds_of(key, fallback_lo, fallback_hi):
        raw = config.get(key)
        if isinstance(raw, (list, tuple)) and len(raw) == 2:
            return float(raw[0]), float(raw[1])
        return fallback_lo, fallback_hi

    a_lo, a_hi = bounds_of("alpha_bounds", 0.0, math.inf)
    b_lo, b_hi = bounds_of("beta_bounds", -math.inf, math.inf)
    c_lo, c_hi = bounds_of("c_bounds", 0.0, 1.0)

    raw_items = _require(payload, "items", list, str(path))
    items: dict[str, ItemParams] = {}
    content: dict[str, str] = {}
    for i, record in enumerate(raw_items):
        where = f"{path}: items[{i}]"
        if not isinstance(record, dict):
            raise SchemaError(f"{where}: must be an object")
        qid = _require(record, "question_id", str, where)
        if qid in items:
            raise SchemaError(f"{where}: duplicate question_id {qid!r}")
        alpha = _require(record, "alpha", float, where)
        beta = _require(record, "beta", float, where)
        c = _require(record, "c", float, where)
        concept = record.get("concept")
        if concept is not None and not isinstance(concept, str):
            raise SchemaError(f"{where}: concept must be a string")
        try:
            items[qid] = ItemParams(qid, alpha, beta, c, concept)
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
        if not (a_lo <= alpha <= a_hi and b_lo <= beta <= b_hi and c_lo <= c <= c_hi):
            raise SchemaError(f"{where}: parameters outside the file's calibration bounds")
        if "content" in record:
            if not isinstance(record["content"], str):
                raise SchemaError(f"{where}: content must be a string")
            content[qid] = record["content"]
    if not items:
        raise SchemaError(f"{path}: pool has no items")

    summary = _require(payload, "human_ability_summary", dict, str(path))
    kind = summary.get("kind")
    if kind not in ("full", "quantiles"):
        raise SchemaError(f"{path}: unknown ability summary kind {kind!r}")
    values = summary.get("values")
    if not isinstance(values, list) or not values:
        raise SchemaError(f"{path}: ability summary needs a non-empty values list")
    abilities = np.array([float(v) for v in values])

    fit_raw = provenance.get("fit") or {}
    fit = FitReport(
        train_loglik=float(fit_raw.get("train_loglik", 0.0)),
        val_loglik=float(fit_raw.get("val_loglik", 0.0)),
        epochs_run=int(fit_raw.get("epochs_run", 0)),
        n_train_logs=int(fit_raw.get("n_train_logs", 0)),
        n_val_logs=int(fit_raw.get("n_val_logs", 0)),
        low_confidence=tuple(fit_raw.get("low_confidence", ())),
        train_path=tuple(fit_raw.get("train_path", ())),
    )
    return CalibratedPool(items=items, human_abilities=abilities, fit_report=fit, content=content)


def read_pool_provenance(path) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return payload.get("provenance") or {}


def dataset_digest(path) -> str:
    """SHA-256 of the raw log file; stored in pool provenance."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Session event logs
# ---------------------------------------------------------------------------

class EventLogWriter:
    """Append-only JSONL sink for session events; flushes after every record."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("a", encoding="utf-8")

    def __call__(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_event_log(path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_number, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ParseError(line_number, "event records must be JSON objects")
            records.append(obj)
    return records
