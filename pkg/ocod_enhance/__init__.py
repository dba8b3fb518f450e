"""Enhancement pipeline for the register of UK property owned by overseas companies."""

__version__ = "1.0.0"
