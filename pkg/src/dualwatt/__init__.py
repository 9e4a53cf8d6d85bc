"""Dual-source (metered vs. software-estimated) power monitoring toolkit."""

__version__ = "0.1.0"

NODES = ("core", "gnodeb", "edge", "ue1", "ue2")
