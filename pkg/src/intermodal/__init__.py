"""Two-stage stochastic planning of containers on intermodal trains."""

__version__ = "0.1.0"
