"""Small-system quantum cryptanalysis toolkit: simulator, cloners, emulation and protocol attacks."""

__version__ = "0.1.0"
