from .render import render
from .specs import FigureSpec, SpecError, load_spec, parse_spec

__all__ = ["FigureSpec", "SpecError", "load_spec", "parse_spec", "render"]
