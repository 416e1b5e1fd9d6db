"""Unitary modular tensor categories and Q-systems."""
