"""Batch rendering of figures from specreg experiment CSV outputs."""

from figure_kit.render import FigureSpec, render
from figure_kit.schemas import SCHEMAS, SchemaReport, validate_schema
from figure_kit.style import Style, load_style

__all__ = [
    "FigureSpec",
    "SCHEMAS",
    "SchemaReport",
    "Style",
    "load_style",
    "render",
    "validate_schema",
]
