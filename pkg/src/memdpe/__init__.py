"""memdpe: behavioral simulator for 1T1R/3T1R memristive DPE memory cells."""

__version__ = "0.1.0"
