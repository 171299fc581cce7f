"""Utility functions for pole_decoherence."""
