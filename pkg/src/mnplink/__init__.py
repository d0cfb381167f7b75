"""Magnetic nanoparticle molecular communication link model."""

__version__ = "0.1.0"
