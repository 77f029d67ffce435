"""Spatial two-photon states from SPDC with a shaped pump beam."""

__version__ = "0.1.0"
