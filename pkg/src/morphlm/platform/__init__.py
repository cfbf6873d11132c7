"""Training platform: datasets, FIFO fine-tune queue, registry, serving."""

from .store import Store
from .bundle import Bundle, write_bundle
from .core import Platform, PlatformError
from .runner import JobRunner, stub_trainer
from .service import create_app

__all__ = [
    "Store",
    "Bundle",
    "write_bundle",
    "Platform",
    "PlatformError",
    "JobRunner",
    "stub_trainer",
    "create_app",
]
