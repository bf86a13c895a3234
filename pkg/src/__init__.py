"""Balaton tableware: municipality shore data compiled into fabrication-ready vessels"""

__version__ = "1.0.0"
