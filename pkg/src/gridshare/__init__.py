"""Robust microgrid dispatch with a real-time energy-sharing market."""

from __future__ import annotations

__version__ = "0.1.0"
