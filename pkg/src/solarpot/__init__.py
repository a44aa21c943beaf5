"""Rooftop solar potential from vector roof geometry, footprints, weather and terrain."""

__version__ = "0.1.0"
