"""Hierarchical object-oriented POMDP planner for multi-room object rearrangement."""

__version__ = "0.1.0"
