"""Durable storage: an append-only NDJSON event log plus state snapshots.

Each log line is one record with a strictly increasing sequence number and a
per-record checksum, so a crash can only ever lose a (possibly torn) suffix.
State is materialized by a deterministic reducer over records; restoring a
snapshot at seq k and replaying the tail from k+1 reproduces the state a
full replay would build.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

NAMESPACES = ("auth", "fleet")


class PersistenceError(Exception):
    pass


class CorruptRecordError(PersistenceError):
    """Checksum mismatch or torn line; carries the last good sequence number."""

    def __init__(self, message: str, last_good_seq: int):
        super().__init__(message)
        self.last_good_seq = last_good_seq


class SequenceGapError(PersistenceError):
    pass


@dataclass(frozen=True)
class LogRecord:
    seq: int
    timestamp: float
    namespace: str
    kind: str
    payload: dict

    def __post_init__(self):
        if self.namespace not in NAMESPACES:
            raise PersistenceError(f"unknown namespace {self.namespace!r}")


def _canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _checksum(doc: dict) -> str:
    return hashlib.sha256(_canonical(doc).encode("utf-8")).hexdigest()[:16]


def record_line(rec: LogRecord) -> str:
    doc = {"seq": rec.seq, "timestamp": rec.timestamp, "namespace": rec.namespace,
           "kind": rec.kind, "payload": rec.payload}
    doc["checksum"] = _checksum(doc)
    return _canonical(doc)


class EventLog:
    """Single-writer append-only log backed by one NDJSON file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next_seq = self._recover_next_seq()

    def _recover_next_seq(self) -> int:
        last = 0
        if self.path.exists():
            for rec in self.replay(tolerant=True):
                last = rec.seq
        return last + 1

    def append(self, timestamp: float, namespace: str, kind: str, payload: dict) -> int:
        with self._lock:
            rec = LogRecord(self._next_seq, timestamp, namespace, kind, payload)
            line = record_line(rec)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
            self._next_seq += 1
            return rec.seq

    def replay(self, from_seq: int = 0, tolerant: bool = False) -> Iterator[LogRecord]:
        """Yield records with seq >= from_seq in order.

        Strict mode raises CorruptRecordError on a torn/garbled line and
        SequenceGapError on a missing seq; tolerant mode stops at the first
        bad line instead (crash recovery semantics).
        """
        if not self.path.exists():
            return
        expected = None
        last_good = 0
        with self.path.open("r", encoding="utf-8", errors="replace") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if raw and not raw.endswith("\n"):
                    # torn final line: never apply a partial record
                    if tolerant:
                        return
                    raise CorruptRecordError(f"line {line_no}: truncated record", last_good)
                try:
                    doc = json.loads(line)
                    stored_sum = doc.pop("checksum")
                    ok = isinstance(doc, dict) and stored_sum == _checksum(doc)
                except (json.JSONDecodeError, KeyError, TypeError, AttributeError):
                    ok = False
                if not ok:
                    if tolerant:
                        return
                    raise CorruptRecordError(f"line {line_no}: corrupt record", last_good)
                rec = LogRecord(doc["seq"], doc["timestamp"], doc["namespace"],
                                doc["kind"], doc["payload"])
                if expected is not None and rec.seq != expected:
                    raise SequenceGapError(
                        f"line {line_no}: expected seq {expected}, found {rec.seq}")
                expected = rec.seq + 1
                last_good = rec.seq
                if rec.seq >= from_seq:
                    yield rec


def apply_record(state: dict, rec: LogRecord) -> None:
    """Deterministic reducer: put/delete/append entity changes per namespace."""
    ns = state.setdefault(rec.namespace, {})
    table = ns.setdefault(rec.kind, {})
    op = rec.payload.get("op", "put")
    key = rec.payload["key"]
    if op == "put":
        table[key] = rec.payload["value"]
    elif op == "delete":
        table.pop(key, None)
    elif op == "append":
        table.setdefault(key, []).append(rec.payload["value"])
    else:
        raise PersistenceError(f"record {rec.seq}: unknown op {op!r}")


def materialize(records: Iterable[LogRecord], base_state: dict | None = None) -> dict:
    state = base_state if base_state is not None else {}
    for rec in records:
        apply_record(state, rec)
    return state


@dataclass(frozen=True)
class Snapshot:
    seq: int
    taken_at: float
    state: dict


def write_snapshot(path: str | Path, log: EventLog, now: float) -> Snapshot:
    """Materialize the whole log and persist it as a snapshot file."""
    state: dict = {}
    last_seq = 0
    for rec in log.replay():
        apply_record(state, rec)
        last_seq = rec.seq
    snap = Snapshot(last_seq, now, state)
    Path(path).write_text(
        _canonical({"seq": snap.seq, "taken_at": snap.taken_at, "state": snap.state}),
        encoding="utf-8")
    return snap


def read_snapshot(path: str | Path) -> Snapshot:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return Snapshot(doc["seq"], doc["taken_at"], doc["state"])


def restore(log: EventLog, snapshot: Snapshot | None = None) -> dict:
    """State from snapshot plus the log tail; tolerant of a torn final record,
    so a crash always restores the state of some prefix of appends."""
    state = json.loads(json.dumps(snapshot.state)) if snapshot else {}
    from_seq = snapshot.seq + 1 if snapshot else 0
    for rec in log.replay(from_seq=from_seq, tolerant=True):
        apply_record(state, rec)
    return state
