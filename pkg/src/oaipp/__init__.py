"""Obstacle-aware adaptive informative path planning for UAV target search.

A layered planner over a Gaussian-process target map: a greedy viewpoint
search seeds waypoint paths that an evolution strategy refines against an
information-per-flight-second objective with collision penalties from a
signed distance field. Ships with lawnmower and random baselines, canned
experiment scenarios, and a mission simulator with a synthetic detector.
"""

__version__ = "0.1.0"
