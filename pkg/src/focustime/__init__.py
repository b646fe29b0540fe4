"""Focus time from tool-usage logs: embed action labels, score windows, validate."""

__version__ = "0.1.0"
