"""Context-aware chart suggestion engine for live data presentations."""

__version__ = "0.1.0"
