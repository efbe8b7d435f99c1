"""Time-fractional stochastic heat inclusion toolkit."""

__version__ = "0.1.0"
