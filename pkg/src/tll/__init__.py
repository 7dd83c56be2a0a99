"""TLL: a two-level linear dependent type theory kernel."""

__version__ = "0.1.0"
