"""Schema-based reinforcement learning with options of options (AO2)."""

__version__ = "0.1.0"
