"""Renormalization numerics for multimodal interval maps of type N."""

__version__ = "0.1.0"
