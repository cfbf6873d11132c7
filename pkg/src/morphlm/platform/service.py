"""HTTP+JSON API over the platform, plus optional static UI hosting.

Error responses always carry {code, message, detail}.
"""

import os
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .core import Platform, PlatformError
from .runner import JobRunner, Trainer


class DatasetIn(BaseModel):
    name: str
    tsv: str


class JobIn(BaseModel):
    dataset_id: str
    hyper: dict = {}


class DeployIn(BaseModel):
    verbalize_emoji: Optional[bool] = None


class PredictIn(BaseModel):
    text: str


def create_app(
    root: str,
    trainer: Optional[Trainer] = None,
    start_worker: bool = True,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    platform = Platform(root)
    runner = JobRunner(platform, trainer=trainer)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        if start_worker:
            runner.start()
        yield
        runner.stop()

    app = FastAPI(title="morphlm platform", version="0.1.0", lifespan=lifespan)
    app.state.platform = platform
    app.state.runner = runner

    @app.exception_handler(PlatformError)
    async def platform_error(_request: Request, err: PlatformError):
        return JSONResponse(
            status_code=err.status,
            content={"code": err.code, "message": err.message, "detail": err.detail},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, err: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "code": "invalid_request",
                "message": "request body failed validation",
                "detail": err.errors(),
            },
        )

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/datasets")
    def create_dataset(body: DatasetIn):
        return platform.create_dataset(body.name, body.tsv)

    @app.get("/api/datasets")
    def list_datasets():
        return platform.store.list("datasets")

    @app.get("/api/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        record = platform.store.load("datasets", dataset_id)
        if record is None:
            raise PlatformError("not_found", f"dataset {dataset_id} does not exist", status=404)
        return record

    @app.post("/api/datasets/{dataset_id}/preprocess")
    def preprocess_dataset(dataset_id: str):
        return platform.preprocess_dataset(dataset_id)

    @app.post("/api/jobs")
    def submit_job(body: JobIn):
        job = platform.submit_job(body.dataset_id, body.hyper)
        runner.notify()
        return job

    @app.get("/api/jobs")
    def list_jobs():
        return platform.list_jobs()

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        return platform.job_record(job_id)

    @app.post("/api/jobs/{job_id}/cancel")
    def cancel_job(job_id: str):
        return platform.cancel_job(job_id)

    @app.get("/api/models")
    def list_models():
        return platform.store.list("models")

    @app.post("/api/models/{model_id}/deploy")
    def deploy_model(model_id: str, body: Optional[DeployIn] = None):
        flag = body.verbalize_emoji if body is not None else None
        return platform.deploy_model(model_id, verbalize_emoji=flag)

    @app.get("/api/deployments")
    def list_deployments():
        return platform.store.list("deployments")

    @app.post("/api/deployments/{deployment_id}/predict")
    def predict(deployment_id: str, body: PredictIn):
        return platform.predict(deployment_id, body.text)

    @app.delete("/api/deployments/{deployment_id}")
    def stop_deployment(deployment_id: str):
        return platform.stop_deployment(deployment_id)

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(root: str, port: int = 8000, host: str = "127.0.0.1", ui_dir: Optional[str] = None) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    app = create_app(root, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
