"""Low-discrepancy expanded-dimensional sampling for particle swarm optimizers."""

__version__ = "0.1.0"
