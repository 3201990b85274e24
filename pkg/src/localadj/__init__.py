"""Local adjunctions between categories of finite-dimensional Hilbert C*-modules."""
__version__ = "0.1.0"
