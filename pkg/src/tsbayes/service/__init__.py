"""HTTP front end exposing fitting, forecasting and comparison."""

from .app import create_app

__all__ = ["create_app"]
