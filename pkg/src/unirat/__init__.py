"""Exact toolkit for building and certifying unirational parametrizations
of quartic hypersurfaces that contain a quadric with multiplicity two."""

__version__ = "0.1.0"
