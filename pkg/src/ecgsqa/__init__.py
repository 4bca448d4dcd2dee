"""Noisy-ECG segment detection from time-domain HRV features."""

__version__ = "0.1.0"
