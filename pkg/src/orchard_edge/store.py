"""Durable persistence: captures, the job queue and inference results in a
single-file SQLite database.

Discipline: one writer (gateway + worker share the Store through its
internal lock), any number of readers. Raw image bytes live on the
filesystem next to the DB; rows carry the path.
"""

import fcntl
import json
import os
import sqlite3
import threading
import time
from datetime import datetime

from .errors import (
    DuplicateResult,
    ForeignKeyViolation,
    MigrationFailure,
    StoreCorrupt,
    StoreLocked,
)
from .gateway import CaptureMeta, ImageRecord
from .ids import new_image_id
from .routing import FrameKind

_MIGRATIONS = [
    # v1
    """
    CREATE TABLE images (
        image_id TEXT PRIMARY KEY,
        device_id TEXT NOT NULL,
        captured_at TEXT NOT NULL,
        altitude_m REAL NOT NULL,
        frame_kind TEXT NOT NULL,
        sequence_no INTEGER NOT NULL,
        width_px INTEGER NOT NULL,
        height_px INTEGER NOT NULL,
        byte_len INTEGER NOT NULL,
        status TEXT NOT NULL,
        stored_path TEXT NOT NULL,
        task TEXT NOT NULL,
        failure_reason TEXT NOT NULL DEFAULT ''
    );
    CREATE TABLE results (
        result_id TEXT PRIMARY KEY,
        image_id TEXT NOT NULL UNIQUE REFERENCES images(image_id),
        task TEXT NOT NULL,
        payload TEXT NOT NULL,
        label TEXT,
        latency_ms REAL NOT NULL DEFAULT 0,
        model_version TEXT NOT NULL,
        created_at INTEGER NOT NULL
    );
    CREATE INDEX idx_images_status ON images(status);
    """,
]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Store:
    def __init__(self, path: str, writable: bool = True):
        self.path = path
        self.writable = writable
        self._write_lock = threading.RLock()
        self._lockfile = None
        # the test suite can point this at a callable that raises, to
        # simulate a crash at a specific write boundary
        self.fault_hook = None

        if writable:
            self._lockfile = open(path + ".lock", "w")
            try:
                fcntl.flock(self._lockfile, fcntl.LOCK_EX | fcntl.LOCK_NB)
            except OSError:
                self._lockfile.close()
                raise StoreLocked(f"another writer holds {path}")

        self.conn = sqlite3.connect(path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        self.conn.execute("PRAGMA journal_mode=WAL")
        self.conn.execute("PRAGMA foreign_keys=ON")
        self.conn.execute("PRAGMA synchronous=NORMAL")
        if writable:
            self._migrate()
        else:
            try:
                self.conn.execute("SELECT version FROM migrations").fetchall()
            except sqlite3.DatabaseError as e:
                raise StoreCorrupt(str(e))

    def _migrate(self):
        try:
            self.conn.execute(
                "CREATE TABLE IF NOT EXISTS migrations (version INTEGER PRIMARY KEY)")
            applied = {r[0] for r in
                       self.conn.execute("SELECT version FROM migrations")}
            for version, script in enumerate(_MIGRATIONS, start=1):
                if version in applied:
                    continue
                with self.conn:
                    self.conn.executescript(script)
                    self.conn.execute("INSERT INTO migrations VALUES (?)", (version,))
        except sqlite3.DatabaseError as e:
            raise MigrationFailure(str(e))

    def close(self):
        self.conn.close()
        if self._lockfile is not None:
            fcntl.flock(self._lockfile, fcntl.LOCK_UN)
            self._lockfile.close()
            self._lockfile = None

    def _fault(self, label: str):
        if self.fault_hook is not None:
            self.fault_hook(label)

    # --- writes ---

    def put_image(self, rec: ImageRecord):
        with self._write_lock:
            try:
                with self.conn:
                    self._fault("before_insert_image")
                    self.conn.execute(
                        """INSERT INTO images VALUES
                           (?,?,?,?,?,?,?,?,?,?,?,?,?)""",
                        (rec.image_id, rec.meta.device_id,
                         rec.meta.to_json_dict()["captured_at"],
                         rec.meta.altitude_m, rec.meta.frame_kind.value,
                         rec.meta.sequence_no, rec.width_px, rec.height_px,
                         rec.byte_len, rec.status, rec.stored_path,
                         rec.task, rec.failure_reason))
                    self._fault("after_insert_image")
            except sqlite3.IntegrityError as e:
                raise ForeignKeyViolation(str(e))

    def set_status(self, image_id: str, status: str, reason: str = ""):
        with self._write_lock:
            with self.conn:
                self._fault("before_set_status")
                cur = self.conn.execute(
                    "UPDATE images SET status=?, failure_reason=? WHERE image_id=?",
                    (status, reason, image_id))
                if cur.rowcount == 0:
                    raise ForeignKeyViolation(f"no image {image_id}")
                self._fault("after_set_status")

    def put_result(self, image_id: str, task: str, payload: dict | list,
                   label: str | None, latency_ms: float, model_version: str) -> str:
        """Insert the result and flip the image to processed, atomically."""
        result_id = new_image_id()
        with self._write_lock:
            try:
                with self.conn:
                    self._fault("before_insert_result")
                    self.conn.execute(
                        "INSERT INTO results VALUES (?,?,?,?,?,?,?,?)",
                        (result_id, image_id, task, canonical_json(payload),
                         label, latency_ms, model_version,
                         int(time.time() * 1000)))
                    self._fault("between_result_and_status")
                    self.conn.execute(
                        "UPDATE images SET status='processed' WHERE image_id=?",
                        (image_id,))
                    self._fault("after_status_flip")
            except sqlite3.IntegrityError as e:
                if "UNIQUE" in str(e):
                    raise DuplicateResult(f"image {image_id} already has a result")
                raise ForeignKeyViolation(str(e))
        return result_id

    # --- reads ---

    @staticmethod
    def _row_to_record(row) -> ImageRecord:
        meta = CaptureMeta(
            device_id=row["device_id"],
            captured_at=datetime.fromisoformat(
                row["captured_at"].replace("Z", "+00:00")),
            altitude_m=row["altitude_m"],
            frame_kind=FrameKind(row["frame_kind"]),
            sequence_no=row["sequence_no"])
        return ImageRecord(
            image_id=row["image_id"], meta=meta, width_px=row["width_px"],
            height_px=row["height_px"], byte_len=row["byte_len"],
            status=row["status"], stored_path=row["stored_path"],
            task=row["task"], failure_reason=row["failure_reason"])

    def get_image(self, image_id: str) -> ImageRecord | None:
        row = self.conn.execute(
            "SELECT * FROM images WHERE image_id=?", (image_id,)).fetchone()
        return self._row_to_record(row) if row else None

    def list_images(self, since: str | None = None, device_id: str | None = None,
                    task: str | None = None, status: str | None = None,
                    limit: int = 50) -> tuple[list[ImageRecord], str | None]:
        """Pages ascending by image_id (= arrival order); returns the cursor
        to pass as `since` for the next page, or None at the end."""
        clauses, args = [], []
        if since:
            clauses.append("image_id > ?")
            args.append(since)
        for col, val in (("device_id", device_id), ("task", task), ("status", status)):
            if val:
                clauses.append(f"{col} = ?")
                args.append(val)
        where = ("WHERE " + " AND ".join(clauses)) if clauses else ""
        rows = self.conn.execute(
            f"SELECT * FROM images {where} ORDER BY image_id LIMIT ?",
            (*args, limit + 1)).fetchall()
        cursor = rows[limit - 1]["image_id"] if len(rows) > limit else None
        return [self._row_to_record(r) for r in rows[:limit]], cursor

    def get_result(self, image_id: str) -> dict | None:
        row = self.conn.execute(
            "SELECT * FROM results WHERE image_id=?", (image_id,)).fetchone()
        if row is None:
            return None
        return {
            "result_id": row["result_id"],
            "image_id": row["image_id"],
            "task": row["task"],
            "payload": json.loads(row["payload"]),
            "label": row["label"],
            "latency_ms": row["latency_ms"],
            "model_version": row["model_version"],
            "created_at": row["created_at"],
        }

    def next_queued(self) -> ImageRecord | None:
        row = self.conn.execute(
            "SELECT * FROM images WHERE status='queued' "
            "ORDER BY image_id LIMIT 1").fetchone()
        return self._row_to_record(row) if row else None

    def queued_count(self) -> int:
        return self.conn.execute(
            "SELECT COUNT(*) FROM images WHERE status='queued'").fetchone()[0]

    def stats(self) -> dict:
        # one snapshot: sqlite serializes these reads within the connection
        with self._write_lock:
            per_task = dict(self.conn.execute(
                "SELECT task, COUNT(*) FROM images GROUP BY task"))
            per_class = dict(self.conn.execute(
                "SELECT label, COUNT(*) FROM results "
                "WHERE label IS NOT NULL GROUP BY label"))
            per_status = dict(self.conn.execute(
                "SELECT status, COUNT(*) FROM images GROUP BY status"))
        return {
            "per_task": per_task,
            "per_class": per_class,
            "failures": per_status.get("failed", 0),
            "queue_depth": per_status.get("queued", 0),
            "processed": per_status.get("processed", 0),
            "received": per_status.get("received", 0),
            "ingested": sum(per_status.values()),
        }

    def conservation_holds(self) -> bool:
        """#results + #failed + #queued + #received == #ingested, and every
        processed image has exactly one result."""
        s = self.stats()
        n_results = self.conn.execute("SELECT COUNT(*) FROM results").fetchone()[0]
        return (n_results == s["processed"]
                and n_results + s["failures"] + s["queue_depth"] + s["received"]
                == s["ingested"])


def open_store(path: str, writable: bool = True) -> Store:
    if os.path.exists(path) and os.path.getsize(path) > 0:
        with open(path, "rb") as fh:
            if fh.read(16) != b"SQLite format 3\x00":
                raise StoreCorrupt(f"{path} is not a SQLite database")
    return Store(path, writable=writable)
