from .app import EventHub, create_app

__all__ = ["EventHub", "create_app"]
