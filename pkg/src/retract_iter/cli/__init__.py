"""Command line front end: config loading, experiment orchestration, file output."""

from .main import main

__all__ = ["main"]
