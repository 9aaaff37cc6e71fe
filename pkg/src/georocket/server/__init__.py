"""HTTP server: import pipeline, search/export, metadata ops, task status."""

from .app import GeoRocketApp
from .config import DEFAULT_PORT, ServerConfig, load_config
from .httpd import EmbeddedServer, GeoRocketHTTPServer
from .reconcile import ReconcileReport, reconcile
from .tasks import ImportTask, TaskRegistry, TaskState

__all__ = [
    "GeoRocketApp",
    "ServerConfig",
    "load_config",
    "DEFAULT_PORT",
    "EmbeddedServer",
    "GeoRocketHTTPServer",
    "ReconcileReport",
    "reconcile",
    "ImportTask",
    "TaskRegistry",
    "TaskState",
]
