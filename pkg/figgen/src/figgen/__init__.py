"""Deterministic figure rendering for topolink output directories.

Each recipe maps one frozen CSV/JSON contract to one image; rendering never
recomputes physics, so byte-identical inputs yield pixel-identical files.
"""

from .recipes import RECIPES, FigureRecipe, SchemaError, render

__all__ = ["RECIPES", "FigureRecipe", "SchemaError", "render"]

__version__ = "0.1.0"
