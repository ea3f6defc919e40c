"""Error-correction analysis of low-energy codes of critical spin chains."""

__version__ = "0.1.0"
