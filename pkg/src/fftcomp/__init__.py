"""FFT compiler over tensor-algebra formulas."""

__version__ = "0.1.0"
