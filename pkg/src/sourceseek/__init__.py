"""Adaptive top-k source seeking with Poisson emitters."""
__version__ = "0.1.0"
