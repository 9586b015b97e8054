"""Multimodal polymer property dataset toolkit."""

__version__ = "0.1.0"
