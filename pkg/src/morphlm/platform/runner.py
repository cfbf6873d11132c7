"""Single-consumer FIFO queue worker for fine-tune jobs.

One background thread owns job execution, so at most one job is RUNNING at
any instant by construction. The trainer is injectable: tests swap in a
stub, the service uses the real fine-tuning entry point.
"""

import os
import threading
import traceback
from typing import Callable, Optional

from ..finetune.data import LabeledExample
from ..finetune.trainer import FinetuneHyper, finetune_run
from ..report.plots import confusion_heatmap_png
from ..report.tables import eval_report_csv
from .core import Platform

Trainer = Callable[[Platform, dict], dict]


def default_trainer(platform: Platform, job: dict) -> dict:
    """Fine-tune on the job's dataset starting from the bundle checkpoint."""
    rows, labels = platform.load_examples(job["dataset_id"])
    index = {name: i for i, name in enumerate(labels)}
    train = [
        LabeledExample(r["text"], tuple(r["words"]), index[r["label"]])
        for r in rows
        if r["split"] == "train"
    ]
    dev = [
        LabeledExample(r["text"], tuple(r["words"]), index[r["label"]])
        for r in rows
        if r["split"] == "dev"
    ]
    if not train or not dev:
        raise ValueError(
            f"dataset needs train and dev rows, got {len(train)}/{len(dev)}"
        )
    out_dir = platform.store.record_dir("runs", job["id"])
    result = finetune_run(
        train,
        dev,
        platform.bundle.checkpoint_path,
        platform.bundle.config_path,
        FinetuneHyper(**job["hyper"]),
        n_classes=len(labels),
        label_names=labels,
        out_dir=out_dir,
    )
    eval_report_csv(
        result.dev_report,
        os.path.join(out_dir, "dev_metrics.csv"),
        confusion_path=os.path.join(out_dir, "confusion.csv"),
    )
    confusion_heatmap_png(
        result.dev_report.confusion,
        os.path.join(out_dir, "confusion.png"),
        label_names=labels,
    )
    model = platform.register_model(
        result.checkpoint_path,
        result.config_path,
        labels,
        job_id=job["id"],
        dev_f1=result.dev_f1,
    )
    return {
        "dev_f1": result.dev_f1,
        "best_epoch": result.best_epoch,
        "history": result.history,
        "report": result.dev_report.to_dict(),
        "model_id": model["id"],
        "warning": result.warning,
    }


def stub_trainer(delay: float = 0.0, fail_on: Optional[set] = None) -> Trainer:
    """Test double: optionally sleeps, optionally crashes on chosen job ids,
    registers no model unless it succeeds with a bundle present."""
    import time

    def run(platform: Platform, job: dict) -> dict:
        if delay:
            time.sleep(delay)
        if fail_on and job["id"] in fail_on:
            raise RuntimeError(f"stub crash for {job['id']}")
        return {"dev_f1": 0.5, "report": None, "model_id": None, "stub": True}

    return run


class JobRunner:
    def __init__(self, platform: Platform, trainer: Optional[Trainer] = None, poll_interval: float = 0.05):
        self.platform = platform
        self.trainer = trainer or default_trainer
        self.poll_interval = poll_interval
        self._wake = threading.Event()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._loop, name="job-runner", daemon=True)
        self._thread.start()

    def stop(self, timeout: float = 10.0) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._wake.set()
        self._thread.join(timeout=timeout)
        self._thread = None

    def notify(self) -> None:
        """Ping the worker that new work may be queued."""
        self._wake.set()

    def run_next(self) -> Optional[dict]:
        """Claim and execute one queued job synchronously; None when idle."""
        job = self.platform.claim_next_job()
        if job is None:
            return None
        try:
            result = self.trainer(self.platform, job)
        except Exception as err:
            detail = f"{err}\n{traceback.format_exc()}"
            return self.platform.finish_job(job["id"], None, detail)
        return self.platform.finish_job(job["id"], result, None)

    def drain(self) -> int:
        """Execute queued jobs until empty; returns the number executed."""
        n = 0
        while self.run_next() is not None:
            n += 1
        return n

    def _loop(self) -> None:
        while not self._stop.is_set():
            if self.run_next() is None:
                self._wake.wait(timeout=self.poll_interval)
                self._wake.clear()
