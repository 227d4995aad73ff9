"""Generative models trained with a learned kernel."""
