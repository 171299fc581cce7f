"""Pole-based relaxation, decoherence and the moving preferred basis."""
