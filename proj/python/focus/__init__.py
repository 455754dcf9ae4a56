"""Python bindings for the focus visual-search core."""

from ._focus import (
    ConfigError,
    DumpError,
    build_map,
    efficiency_ratio,
    existence_confidence,
    generate_scene,
    propose,
    read_header,
    search_synthetic,
)

__all__ = [
    "ConfigError",
    "DumpError",
    "build_map",
    "efficiency_ratio",
    "existence_confidence",
    "generate_scene",
    "propose",
    "read_header",
    "search_synthetic",
]
