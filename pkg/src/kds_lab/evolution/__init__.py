"""Method-of-lines evolution on the extended Kerr-de Sitter exterior."""
from .grid import Grid2D, build_grid

__all__ = ["Grid2D", "build_grid"]
