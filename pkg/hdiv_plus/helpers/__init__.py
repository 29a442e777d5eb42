"""Helpers for hdiv-plus."""
