"""Logging, errors and artifact writers."""
