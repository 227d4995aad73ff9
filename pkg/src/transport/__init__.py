"""Optimal transport: entropic Sinkhorn and an exact small-instance oracle."""
