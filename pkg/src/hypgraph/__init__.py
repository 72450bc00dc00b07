"""Minimal graphs over ideal polygonal domains of hyperbolic surfaces."""
