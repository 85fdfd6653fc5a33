from .app import app, create_app, execute_run, config_from_request
from .models import RunManifestModel, RunRequest

__all__ = ["app", "create_app", "execute_run", "config_from_request", "RunRequest", "RunManifestModel"]
