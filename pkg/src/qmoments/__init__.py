"""Classical versus quantum moment tests for small multi-observer systems."""
__version__ = "0.1.0"
