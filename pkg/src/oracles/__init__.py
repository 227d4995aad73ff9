"""Closed-form heat kernels and theory-derived checks."""
