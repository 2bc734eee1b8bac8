"""Fixed-point computation for conservative signal-processing structures."""

__version__ = "0.1.0"
