"""Reverse-mode autodiff, MLPs, Adam and the project's error types."""
