"""HTTP service: FastAPI app plus the pydantic wire models."""

from .app import app, create_app

__all__ = ["app", "create_app"]
