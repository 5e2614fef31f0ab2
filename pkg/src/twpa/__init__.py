"""Design and analysis toolkit for kinetic-inductance travelling-wave parametric amplifiers."""

__version__ = "0.1.0"
