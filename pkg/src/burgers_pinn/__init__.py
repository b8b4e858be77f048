"""Physics-informed neural network solver for Burgers-type benchmarks."""

__version__ = "0.1.0"
