"""Synthetic pedestrian-tracking lab: simulate, detect, associate, evaluate."""

__version__ = "0.1.0"
TOOL_NAME = "motlab"
