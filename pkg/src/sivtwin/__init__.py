"""Digital twin of a silicon-vacancy centre coupled to a fibre Fabry-Perot microcavity."""

__version__ = "0.1.0"
