"""Virtual machine consolidation toolkit (build in progress)."""

__version__ = "0.1.0"
