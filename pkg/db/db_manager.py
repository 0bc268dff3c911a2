import os
import sqlite3
from datetime import datetime, timezone
from typing import Dict, List, Tuple, Optional

from config import DB_PATH


SCHEMA_SQL = (
    """
    CREATE TABLE IF NOT EXISTS runs (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        config_hash TEXT,
        code_version TEXT,
        command TEXT,
        model TEXT,
        geometry TEXT,
        seed INTEGER,
        out_dir TEXT,
        started_at TEXT,
        finished_at TEXT,
        status TEXT,
        exit_code INTEGER DEFAULT 0
    );
    """,
    """
    CREATE TABLE IF NOT EXISTS run_outputs (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        run_id INTEGER,
        path TEXT,
        sha256 TEXT
    );
    """,
)


def get_connection(db_path: Optional[str] = None) -> sqlite3.Connection:
    path = db_path or DB_PATH
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    return sqlite3.connect(path)


def init_db(db_path: Optional[str] = None) -> None:
    with get_connection(db_path) as conn:
        for statement in SCHEMA_SQL:
            conn.execute(statement)
        conn.commit()
    migrate_db(db_path)


def migrate_db(db_path: Optional[str] = None) -> None:
    with get_connection(db_path) as conn:
        cursor = conn.cursor()
        try:
            cursor.execute("SELECT name FROM sqlite_master WHERE type='table' AND name='runs'")
            if not cursor.fetchone():
                return

            # PRAGMA table_info returns tuples: (cid, name, type, notnull, dflt_value, pk)
            columns = [row[1] for row in cursor.execute("PRAGMA table_info(runs)").fetchall()]

            # Add missing columns one-by-one, do not abort on error
            for name, ddl in (
                ("command", "TEXT"),
                ("status", "TEXT"),
                ("exit_code", "INTEGER DEFAULT 0"),
            ):
                if name not in columns:
                    try:
                        cursor.execute(f"ALTER TABLE runs ADD COLUMN {name} {ddl}")
                    except sqlite3.Error:
                        pass
            conn.commit()
        except sqlite3.Error:
            # Ignore migration errors; inserts will still surface issues
            pass

        create_indexes(conn)


def create_indexes(conn: sqlite3.Connection) -> None:
    cursor = conn.cursor()
    try:
        existing_indexes = [row[0] for row in cursor.execute("SELECT name FROM sqlite_master WHERE type='index' AND name LIKE 'idx_%'").fetchall()]

        if "idx_runs_config_hash" not in existing_indexes:
            cursor.execute("CREATE INDEX idx_runs_config_hash ON runs(config_hash)")

        if "idx_outputs_run" not in existing_indexes:
            cursor.execute("CREATE INDEX idx_outputs_run ON run_outputs(run_id)")

        conn.commit()
    except sqlite3.Error:
        pass


def register_run(record: Dict, outputs: List[Dict], db_path: Optional[str] = None) -> int:
    """Insert one run and its checksummed outputs; returns the run id."""
    with get_connection(db_path) as conn:
        cursor = conn.cursor()
        cursor.execute(
            (
                "INSERT INTO runs (config_hash, code_version, command, model, geometry, seed, out_dir, "
                "started_at, finished_at, status, exit_code) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)"
            ),
            (
                record.get("config_hash"),
                record.get("code_version"),
                record.get("command", "run"),
                record.get("model"),
                record.get("geometry"),
                record.get("seed"),
                record.get("out_dir"),
                record.get("started_at"),
                record.get("finished_at", datetime.now(timezone.utc).isoformat()),
                record.get("status", "ok"),
                int(record.get("exit_code", 0) or 0),
            ),
        )
        run_id = cursor.lastrowid
        cursor.executemany(
            "INSERT INTO run_outputs (run_id, path, sha256) VALUES (?, ?, ?)",
            [(run_id, out.get("path"), out.get("sha256")) for out in outputs],
        )
        conn.commit()
        return run_id


def fetch_all_runs(db_path: Optional[str] = None) -> List[Tuple]:
    with get_connection(db_path) as conn:
        cur = conn.execute(
            "SELECT id, config_hash, code_version, command, model, geometry, seed, out_dir, "
            "started_at, finished_at, status, exit_code FROM runs ORDER BY id ASC"
        )
        return cur.fetchall()


def fetch_outputs(run_id: int, db_path: Optional[str] = None) -> List[Tuple]:
    with get_connection(db_path) as conn:
        cur = conn.execute("SELECT path, sha256 FROM run_outputs WHERE run_id = ? ORDER BY id ASC", (run_id,))
        return cur.fetchall()


def find_runs_by_hash(config_hash: str, db_path: Optional[str] = None) -> List[int]:
    with get_connection(db_path) as conn:
        cur = conn.execute("SELECT id FROM runs WHERE config_hash = ? ORDER BY id ASC", (config_hash,))
        return [row[0] for row in cur.fetchall()]
