"""Two-fold singularities of planar piecewise-smooth systems and their regularizations."""

__version__ = "0.1.0"
