"""Figure scripts for tracker run outputs."""

from .figures import FIGURE_KINDS, FigureSpec, render
from .schemas import SchemaError

__all__ = ["FIGURE_KINDS", "FigureSpec", "SchemaError", "render"]
