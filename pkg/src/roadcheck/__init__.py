"""roadcheck: assertion checking of driving traces against highway-code rules."""

__version__ = "0.1.0"
