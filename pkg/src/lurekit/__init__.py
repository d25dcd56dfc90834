"""Desk-scale simulator and training toolkit for multimodal robot navigation teaching."""

__version__ = "0.1.0"
