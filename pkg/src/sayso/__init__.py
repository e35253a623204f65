"""Teach a simulated forklift robot by talking to it.

Constrained English becomes inference rules and behavior operators over a
three-level semantic-network memory; a directive interpreter executes them
against a deterministic 2D robot kernel.
"""

from .config import DEFAULT_CONFIG, EngineConfig
from .interp import Engine
from .kernel import Kernel, World, parse_world
from .semnet import Level, Memory

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONFIG",
    "Engine",
    "EngineConfig",
    "Kernel",
    "Level",
    "Memory",
    "World",
    "parse_world",
    "__version__",
]
