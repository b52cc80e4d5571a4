"""Trustworthy ML toolkit for healthcare in low-resource settings."""
__version__ = "0.1.0"
