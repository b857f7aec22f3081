"""Twisted-photon QKD through turbulent water: optics, retrieval and key analysis."""

__version__ = "0.1.0"
