"""Command-line interface and run configuration."""
from .config import ConfigError, RunConfig, load_config, parse_config, resolve_output
from .main import build_parser, main

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "resolve_output", "build_parser", "main"]
