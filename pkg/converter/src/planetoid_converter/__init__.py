"""Convert upstream Planetoid citation bundles to portable text datasets."""

from .convert import ConverterError, PlanetoidBundle, convert, load_bundle

__all__ = ["ConverterError", "PlanetoidBundle", "convert", "load_bundle"]
