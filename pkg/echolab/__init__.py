"""Semiclassical echo, return-probability and revival experiments"""

__version__ = "0.1.0"
