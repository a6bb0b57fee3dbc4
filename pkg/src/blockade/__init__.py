"""Photon blockade toolkit for the extended two-photon Jaynes-Cummings model."""
__version__ = "0.1.0"
