"""Stein variational gradient descent, its heat-kernel variant and the BNN harness."""
