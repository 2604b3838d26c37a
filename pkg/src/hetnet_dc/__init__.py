"""Time-slotted downlink simulator for dual connectivity in two-tier HetNets."""

__version__ = "0.1.0"
