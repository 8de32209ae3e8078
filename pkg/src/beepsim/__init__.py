"""Anonymous naming protocols on a simulated beeping channel."""

__version__ = "0.1.0"
