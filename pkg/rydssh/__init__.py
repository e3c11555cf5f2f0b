"""Two-dimensional SSH model on offset Rydberg sublattices."""

__version__: str = "0.1.0"
