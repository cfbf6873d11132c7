"""On-disk registry: one directory per record kind, JSON manifests.

Layout under the root:
    datasets/<id>/manifest.json + raw.tsv + preprocessed.jsonl
    runs/<id>/...            fine-tune artifacts per job
    models/<id>/manifest.json + model.ckpt + model.config
    deployments/<id>/manifest.json
    bundle/                  tokenizer + pre-trained checkpoint shared by jobs

Writes are atomic (temp file + rename) so a crash never leaves a torn
manifest. Record ids are zero-padded ordinals allocated under a lock.
"""

import json
import os
import tempfile
import threading
from typing import Dict, List, Optional

KINDS = ("datasets", "runs", "models", "deployments")
_PREFIX = {"datasets": "ds", "runs": "run", "models": "mdl", "deployments": "dep"}


def atomic_write_text(path: str, payload: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: str, record: dict) -> None:
    atomic_write_text(path, json.dumps(record, indent=2, sort_keys=True))


class Store:
    """Filesystem-backed record store for the platform."""

    def __init__(self, root: str):
        self.root = os.path.abspath(root)
        self.lock = threading.RLock()
        for kind in KINDS:
            os.makedirs(os.path.join(self.root, kind), exist_ok=True)

    def kind_dir(self, kind: str) -> str:
        if kind not in KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        return os.path.join(self.root, kind)

    def record_dir(self, kind: str, record_id: str) -> str:
        return os.path.join(self.kind_dir(kind), record_id)

    def manifest_path(self, kind: str, record_id: str) -> str:
        return os.path.join(self.record_dir(kind, record_id), "manifest.json")

    def new_record(self, kind: str, record: dict) -> dict:
        """Allocate the next id for `kind` and persist the manifest."""
        with self.lock:
            prefix = _PREFIX[kind]
            taken = [
                int(name[len(prefix):])
                for name in os.listdir(self.kind_dir(kind))
                if name.startswith(prefix) and name[len(prefix):].isdigit()
            ]
            record_id = f"{prefix}{(max(taken) + 1 if taken else 1):04d}"
            record = {**record, "id": record_id}
            os.makedirs(self.record_dir(kind, record_id), exist_ok=True)
            atomic_write_json(self.manifest_path(kind, record_id), record)
            return record

    def save(self, kind: str, record: dict) -> dict:
        with self.lock:
            atomic_write_json(self.manifest_path(kind, record["id"]), record)
            return record

    def load(self, kind: str, record_id: str) -> Optional[dict]:
        path = self.manifest_path(kind, record_id)
        if not os.path.exists(path):
            return None
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    def list(self, kind: str) -> List[dict]:
        """All records of a kind, ordered by id (= allocation order)."""
        out = []
        for name in sorted(os.listdir(self.kind_dir(kind))):
            record = self.load(kind, name)
            if record is not None:
                out.append(record)
        return out

    def update(self, kind: str, record_id: str, **fields) -> dict:
        """Atomic read-modify-write of one manifest."""
        with self.lock:
            record = self.load(kind, record_id)
            if record is None:
                raise KeyError(f"{kind}/{record_id} not found")
            record.update(fields)
            return self.save(kind, record)
