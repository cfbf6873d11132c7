"""Platform state machine: datasets, jobs, model registry, deployments.

All transitions go through this class so they stay atomic under the store
lock; the HTTP layer and the queue worker are thin wrappers around it.
"""

import json
import os
import shutil
import threading
import time
from typing import Dict, List, Optional, Sequence, Tuple

import torch

from ..finetune.data import discover_labels, parse_tsv, split_examples
from ..finetune.trainer import FinetuneHyper, classify_forward
from ..model.two_tier import TwoTierModel, load_model
from ..tokenizer.vocab import MorphoWord
from .bundle import Bundle
from .store import Store, atomic_write_text

DATASET_STATES = ("uploaded", "preprocessing", "ready", "failed")
JOB_STATES = ("QUEUED", "RUNNING", "SUCCEEDED", "FAILED", "CANCELLED")
DEPLOYMENT_STATES = ("STARTING", "SERVING", "STOPPED")


class PlatformError(Exception):
    """Carries the API error triple: code, message, optional detail."""

    def __init__(self, code: str, message: str, detail=None, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail
        self.status = status


def _not_found(kind: str, record_id: str) -> PlatformError:
    return PlatformError(
        "not_found", f"{kind} {record_id} does not exist", status=404
    )


def _example_line(words: Sequence[MorphoWord], text: str, label: str, split: str) -> str:
    return json.dumps(
        {
            "text": text,
            "label": label,
            "split": split,
            "words": [w.to_json() for w in words],
        },
        sort_keys=True,
    )


def _parse_example_line(line: str) -> dict:
    d = json.loads(line)
    d["words"] = [MorphoWord.from_json(w) for w in d["words"]]
    return d


class _LiveDeployment:
    """A loaded model serving one deployment, isolated from all others."""

    def __init__(self, model: TwoTierModel, labels: List[str], verbalize_emoji: bool):
        self.model = model
        self.labels = labels
        self.verbalize_emoji = verbalize_emoji
        self.lock = threading.Lock()


class Platform:
    def __init__(self, root: str):
        self.root = os.path.abspath(root)
        self.store = Store(self.root)
        self._bundle: Optional[Bundle] = None
        self._live: Dict[str, _LiveDeployment] = {}
        self._live_lock = threading.Lock()
        self.recover()

    # -- bundle ------------------------------------------------------------

    @property
    def bundle_dir(self) -> str:
        return os.path.join(self.root, "bundle")

    @property
    def bundle(self) -> Bundle:
        if self._bundle is None:
            self._bundle = Bundle(self.bundle_dir)
        return self._bundle

    # -- restart recovery ----------------------------------------------------

    def recover(self) -> None:
        """Reconcile state after a restart: a job RUNNING at crash time is
        FAILED; QUEUED jobs stay queued in order; a deployment caught mid
        start is STOPPED. Models reload lazily on first predict."""
        for job in self.store.list("runs"):
            if job.get("state") == "RUNNING":
                self.store.update(
                    "runs",
                    job["id"],
                    state="FAILED",
                    error="interrupted by platform restart",
                    finished_at=time.time(),
                )
        for dep in self.store.list("deployments"):
            if dep.get("state") == "STARTING":
                self.store.update("deployments", dep["id"], state="STOPPED")

    # -- datasets ------------------------------------------------------------

    def create_dataset(self, name: str, tsv_payload: str) -> dict:
        """Store the raw TSV verbatim after a structural scan.

        Rows without a tab (or with empty text/label) are rejected up front
        with line-numbered diagnostics and no record is created.
        """
        if not name or not name.strip():
            raise PlatformError("invalid_name", "dataset name must be nonempty")
        if not tsv_payload.strip():
            raise PlatformError("empty_payload", "dataset payload is empty")
        try:
            rows = parse_tsv(tsv_payload)
        except ValueError as err:
            raise PlatformError("malformed_tsv", str(err))
        record = self.store.new_record(
            "datasets",
            {
                "name": name.strip(),
                "state": "uploaded",
                "raw_file": "raw.tsv",
                "preprocessed_file": None,
                "labels": [],
                "row_counts": {},
                "n_rows": len(rows),
                "error": None,
                "created_at": time.time(),
            },
        )
        atomic_write_text(
            os.path.join(self.store.record_dir("datasets", record["id"]), "raw.tsv"),
            tsv_payload,
        )
        return record

    def preprocess_dataset(self, dataset_id: str, seed: int = 0) -> dict:
        """Discover labels, segment every text, store JSON-lines; -> ready.

        Re-running on a ready dataset is idempotent. A failed run (analyzer
        unavailable, bad rows) leaves the dataset failed and retryable.
        """
        record = self.store.load("datasets", dataset_id)
        if record is None:
            raise _not_found("dataset", dataset_id)
        self.store.update("datasets", dataset_id, state="preprocessing", error=None)
        try:
            raw_path = os.path.join(
                self.store.record_dir("datasets", dataset_id), "raw.tsv"
            )
            with open(raw_path, "r", encoding="utf-8") as f:
                rows = parse_tsv(f.read())
            labels = discover_labels(rows)
            splits = split_examples(rows, seed=seed)
            lines = []
            for split_name in ("train", "dev", "test"):
                for text, label in getattr(splits, split_name):
                    words = self.bundle.tokenize(text)
                    if not words:
                        raise ValueError(f"text tokenized to zero words: {text!r}")
                    lines.append(_example_line(words, text, label, split_name))
            out_path = os.path.join(
                self.store.record_dir("datasets", dataset_id), "preprocessed.jsonl"
            )
            atomic_write_text(out_path, "\n".join(lines) + "\n")
        except Exception as err:  # analyzer/io/validation: dataset turns failed
            return self.store.update(
                "datasets", dataset_id, state="failed", error=str(err)
            )
        return self.store.update(
            "datasets",
            dataset_id,
            state="ready",
            preprocessed_file="preprocessed.jsonl",
            labels=labels,
            row_counts=splits.counts(),
        )

    def load_examples(self, dataset_id: str) -> Tuple[List[dict], List[str]]:
        """Parsed preprocessed rows + the dataset's label inventory."""
        record = self.store.load("datasets", dataset_id)
        if record is None:
            raise _not_found("dataset", dataset_id)
        if record["state"] != "ready":
            raise PlatformError(
                "dataset_not_ready",
                f"dataset {dataset_id} is {record['state']}, not ready",
            )
        path = os.path.join(
            self.store.record_dir("datasets", dataset_id), record["preprocessed_file"]
        )
        rows = []
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    rows.append(_parse_example_line(line))
        return rows, record["labels"]

    # -- jobs ------------------------------------------------------------------

    def submit_job(self, dataset_id: str, hyper: dict) -> dict:
        dataset = self.store.load("datasets", dataset_id)
        if dataset is None:
            raise _not_found("dataset", dataset_id)
        if dataset["state"] != "ready":
            raise PlatformError(
                "dataset_not_ready",
                f"dataset {dataset_id} is {dataset['state']}, not ready",
            )
        try:
            parsed = FinetuneHyper(**hyper)
        except (TypeError, ValueError) as err:
            raise PlatformError("invalid_hyper", str(err))
        return self.store.new_record(
            "runs",
            {
                "dataset_id": dataset_id,
                "hyper": {
                    "peak_lr": parsed.peak_lr,
                    "batch_size": parsed.batch_size,
                    "epochs": parsed.epochs,
                    "dropout": parsed.dropout,
                    "weight_decay": parsed.weight_decay,
                    "warmup_fraction": parsed.warmup_fraction,
                    "seed": parsed.seed,
                },
                "state": "QUEUED",
                "submitted_at": time.time(),
                "started_at": None,
                "finished_at": None,
                "cancel_requested": False,
                "error": None,
                "result": None,
            },
        )

    def job_record(self, job_id: str) -> dict:
        job = self.store.load("runs", job_id)
        if job is None:
            raise _not_found("job", job_id)
        if job["state"] == "QUEUED":
            queued = [j["id"] for j in self.store.list("runs") if j["state"] == "QUEUED"]
            job["queue_position"] = queued.index(job_id)
        return job

    def list_jobs(self) -> List[dict]:
        jobs = self.store.list("runs")
        position = 0
        for job in jobs:
            if job["state"] == "QUEUED":
                job["queue_position"] = position
                position += 1
        return jobs

    def cancel_job(self, job_id: str) -> dict:
        """QUEUED jobs cancel immediately; RUNNING is best-effort (flagged)."""
        with self.store.lock:
            job = self.store.load("runs", job_id)
            if job is None:
                raise _not_found("job", job_id)
            if job["state"] == "QUEUED":
                return self.store.update(
                    "runs", job_id, state="CANCELLED", finished_at=time.time()
                )
            if job["state"] == "RUNNING":
                return self.store.update("runs", job_id, cancel_requested=True)
            raise PlatformError(
                "not_cancellable", f"job {job_id} is {job['state']}"
            )

    def claim_next_job(self) -> Optional[dict]:
        """Pop the queue head (FIFO by id order) and mark it RUNNING."""
        with self.store.lock:
            for job in self.store.list("runs"):
                if job["state"] == "QUEUED":
                    return self.store.update(
                        "runs", job["id"], state="RUNNING", started_at=time.time()
                    )
        return None

    def finish_job(self, job_id: str, result: Optional[dict], error: Optional[str]) -> dict:
        state = "SUCCEEDED" if error is None else "FAILED"
        return self.store.update(
            "runs",
            job_id,
            state=state,
            result=result,
            error=error,
            finished_at=time.time(),
        )

    # -- models ---------------------------------------------------------------

    def register_model(
        self,
        checkpoint_path: str,
        config_path: str,
        labels: Sequence[str],
        job_id: Optional[str] = None,
        dev_f1: Optional[float] = None,
    ) -> dict:
        record = self.store.new_record(
            "models",
            {
                "labels": list(labels),
                "job_id": job_id,
                "dev_f1": dev_f1,
                "checkpoint": "model.ckpt",
                "config": "model.config",
                "created_at": time.time(),
            },
        )
        model_dir = self.store.record_dir("models", record["id"])
        shutil.copyfile(checkpoint_path, os.path.join(model_dir, "model.ckpt"))
        shutil.copyfile(config_path, os.path.join(model_dir, "model.config"))
        return record

    def model_paths(self, model_id: str) -> Tuple[str, str, dict]:
        record = self.store.load("models", model_id)
        if record is None:
            raise _not_found("model", model_id)
        model_dir = self.store.record_dir("models", model_id)
        return (
            os.path.join(model_dir, record["checkpoint"]),
            os.path.join(model_dir, record["config"]),
            record,
        )

    # -- deployments -----------------------------------------------------------

    def deploy_model(self, model_id: str, verbalize_emoji: Optional[bool] = None) -> dict:
        ckpt, cfg, model_record = self.model_paths(model_id)
        flag = self.bundle.verbalize_emoji if verbalize_emoji is None else bool(verbalize_emoji)
        record = self.store.new_record(
            "deployments",
            {
                "model_id": model_id,
                "state": "STARTING",
                "verbalize_emoji": flag,
                "request_count": 0,
                "created_at": time.time(),
            },
        )
        live = _LiveDeployment(
            model=load_model(ckpt, cfg),
            labels=model_record["labels"],
            verbalize_emoji=flag,
        )
        with self._live_lock:
            self._live[record["id"]] = live
        return self.store.update("deployments", record["id"], state="SERVING")

    def _live_deployment(self, deployment_id: str) -> _LiveDeployment:
        record = self.store.load("deployments", deployment_id)
        if record is None:
            raise _not_found("deployment", deployment_id)
        if record["state"] != "SERVING":
            raise PlatformError(
                "not_serving",
                f"deployment {deployment_id} is {record['state']}",
                status=409,
            )
        with self._live_lock:
            live = self._live.get(deployment_id)
            if live is None:  # restarted process: reload read-only weights
                ckpt, cfg, model_record = self.model_paths(record["model_id"])
                live = _LiveDeployment(
                    model=load_model(ckpt, cfg),
                    labels=model_record["labels"],
                    verbalize_emoji=record["verbalize_emoji"],
                )
                self._live[deployment_id] = live
        return live

    def predict(self, deployment_id: str, text: str) -> dict:
        if not text or not text.strip():
            raise PlatformError("empty_text", "text must be nonempty")
        live = self._live_deployment(deployment_id)
        words = self.bundle.tokenize(text, verbalize_emoji=live.verbalize_emoji)
        if not words:
            raise PlatformError("empty_text", "text tokenized to zero words")
        with live.lock, torch.no_grad():
            logits = classify_forward(words, live.model)
            probs = torch.softmax(logits, dim=-1).tolist()
        label_id = max(range(len(probs)), key=lambda c: (probs[c], -c))
        with self.store.lock:
            current = self.store.load("deployments", deployment_id)
            record = self.store.update(
                "deployments", deployment_id, request_count=current["request_count"] + 1
            )
        return {
            "deployment_id": deployment_id,
            "model_id": record["model_id"],
            "label": live.labels[label_id],
            "label_id": label_id,
            "probabilities": {live.labels[i]: p for i, p in enumerate(probs)},
        }

    def stop_deployment(self, deployment_id: str) -> dict:
        record = self.store.load("deployments", deployment_id)
        if record is None:
            raise _not_found("deployment", deployment_id)
        with self._live_lock:
            self._live.pop(deployment_id, None)
        return self.store.update("deployments", deployment_id, state="STOPPED")
