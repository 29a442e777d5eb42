"""Tests for hdiv-plus."""
