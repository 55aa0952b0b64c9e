"""Namespace package for testing."""
