"""Real-root fluctuations of random polynomials."""
__version__ = "0.1.0"
