"""divmax: maximum information divergence from linear and toric models."""

__version__ = "0.1.0"
