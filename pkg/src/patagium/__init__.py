"""Foldable-wing quadrotor workbench: kinematics, aero, control, learning."""

__version__ = "0.1.0"

from .config import Config, load_config

__all__ = ["Config", "load_config", "__version__"]
