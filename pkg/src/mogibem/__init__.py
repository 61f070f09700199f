"""Pressurized-cavity surface deformation in an elastic half-space."""

__version__ = "0.1.0"
