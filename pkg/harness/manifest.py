"""Run manifests: config hash, code version, timestamps and checksummed outputs."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Mapping

from . import __version__

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(raw: Mapping) -> str:
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    config_hash: str
    code_version: str = __version__
    started_at: str = field(default_factory=now_iso)
    finished_at: str | None = None
    outputs: List[Dict[str, str]] = field(default_factory=list)
    config: Dict = field(default_factory=dict)

    def add_output(self, path: str, root: str) -> None:
        self.outputs.append({"path": os.path.relpath(path, root), "sha256": sha256_file(path)})


def write_manifest(manifest: RunManifest, out_dir: str) -> str:
    """Stamps the finish time and writes the manifest; always the last file of a run."""
    manifest.finished_at = now_iso()
    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
    return path


def load_manifest(path: str) -> RunManifest:
    with open(path, "r", encoding="utf-8") as f:
        return RunManifest(**json.load(f))


def verify_manifest(path: str) -> List[str]:
    """Outputs whose current checksum differs from the recorded one (missing files included)."""
    manifest = load_manifest(path)
    root = os.path.dirname(path)
    bad = []
    for entry in manifest.outputs:
        target = os.path.join(root, entry["path"])
        if not os.path.isfile(target) or sha256_file(target) != entry["sha256"]:
            bad.append(entry["path"])
    return bad
