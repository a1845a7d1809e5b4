"""Proactive query expansion for windowed text streams."""

__version__ = "0.1.0"
